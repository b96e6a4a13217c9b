//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::Instant;

use rand::Rng;
use zenolab::bounds::{bound_report, domination_slack, entropy_conditions, sigma_dominator};
use zenolab::cli::main_with;
use zenolab::cli::scenario::parse_scenario;
use zenolab::cli::suite::{corpus_case, CorpusCase, Variant};
use zenolab::cli::sweep::{fit_loglog, run_sweep};
use zenolab::curves::{a3_sum, a3_sum_chordal, eta, xi_covering, BasisCurve, DEFAULT_GRID};
use zenolab::measurement::{
    evolve_by_channels, initial_lambdas, leak_by_path_enumeration, run_measurement,
    transfer_lambda, MeasurementResult, Partition,
};
use zenolab::numerics::{c, random, trace_norm, unitary_exponential, CMatrix};
use zenolab::states::{fannes_bound, spectral_sum, von_neumann_entropy, DensityMatrix};

const SEED: u64 = 42;
const CORPUS: usize = 200;
const REFINE: [usize; 10] = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn corpus() -> Vec<CorpusCase> {
    (0..CORPUS).map(|i| corpus_case(SEED, i).expect("corpus case")).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dual_route(cases: &[CorpusCase]) -> Outcome {
    let start = Instant::now();
    let (mut worst_gap, mut worst_off) = (0.0_f64, 0.0_f64);
    for case in cases {
        let rho = evolve_by_channels(&case.rho, &case.h, &case.curve, &case.partition)
            .map_err(|e| format!("case {}: {e}", case.index))?;
        let lambdas = initial_lambdas(&case.rho, &case.curve).map_err(|e| e.to_string())?;
        let ld = transfer_lambda(&lambdas, &case.curve, &case.h, &case.partition)
            .map_err(|e| e.to_string())?;
        let end = case.curve.evaluate(case.partition.tau()).map_err(|e| e.to_string())?;
        let gap = rho.populations(&end).iter().zip(&ld).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let off = rho.off_diagonal_residual(&end);
        ensure(gap <= 1e-9 && off <= 1e-9, || {
            format!("case {}: route gap {gap:.3e}, off-diagonal {off:.3e}", case.index)
        })?;
        worst_gap = worst_gap.max(gap);
        worst_off = worst_off.max(off);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "{} cases, max route gap {worst_gap:.2e}, max off-diagonal {worst_off:.2e}, {secs:.2} s",
        cases.len()
    ))
}

fn measure(case: &CorpusCase) -> Result<MeasurementResult, String> {
    run_measurement(&case.rho, &case.h, &case.curve, &case.partition)
        .map_err(|e| format!("case {}: {e}", case.index))
}

/// Extra qubit cases with N ≤ 6 for the path-sum oracle.
fn enumeration_cases() -> Vec<CorpusCase> {
    let mut out = Vec::new();
    let mut i = 0;
    while out.len() < 48 {
        let case = corpus_case(SEED + 1, i).expect("corpus case");
        i += 1;
        if case.curve.dim() == 2 && case.partition.steps() <= 6 {
            out.push(case);
        }
        if i > 200_000 {
            break;
        }
    }
    out
}

fn leakage_identity(cases: &[CorpusCase]) -> Outcome {
    let mut worst = 0.0_f64;
    for case in cases {
        let r = measure(case)?;
        for k in 0..r.dim() {
            let gap = (r.lambdas[k] * r.gamma[k] + r.epsilon[k] - r.lambda_delta[k]).abs();
            ensure(gap <= 1e-9, || format!("case {} k={k}: identity gap {gap:.3e}", case.index))?;
            worst = worst.max(gap);
        }
    }
    let mut small: Vec<CorpusCase> =
        cases.iter().filter(|c| c.curve.dim() == 2 && c.partition.steps() <= 6).cloned().collect();
    small.extend(enumeration_cases());
    let mut worst_path = 0.0_f64;
    for case in &small {
        let r = measure(case)?;
        for k in 0..2 {
            let brute = leak_by_path_enumeration(&r.lambdas, &case.curve, &case.h, &case.partition, k)
                .map_err(|e| e.to_string())?;
            let gap = (brute - r.epsilon[k]).abs();
            ensure(gap <= 1e-10, || format!("N={} k={k}: path sum gap {gap:.3e}", case.partition.steps()))?;
            worst_path = worst_path.max(gap);
        }
    }
    Ok(format!(
        "identity gap {worst:.2e} over corpus; path sum gap {worst_path:.2e} over {} qubit cases",
        small.len()
    ))
}

fn bound_dominance(cases: &[CorpusCase]) -> Outcome {
    let mut conditional = 0;
    let mut slack = f64::INFINITY;
    for case in cases {
        let r = measure(case)?;
        for a in [1.5, 2.0, 4.0] {
            let rep = bound_report(&r, &case.curve, &case.h, &case.partition, a, DEFAULT_GRID)
                .map_err(|e| e.to_string())?;
            ensure(rep.passed(), || format!("case {} a={a}: {}", case.index, rep.violations.join("; ")))?;
            for rec in &rep.records {
                if rec.mesh_ok {
                    conditional += 1;
                    slack = slack.min(rec.gamma - rec.gamma_lower);
                }
                ensure(rec.epsilon <= rec.epsilon_bound + 1e-9, || {
                    format!("case {} k={}: eps above bound", case.index, rec.k)
                })?;
            }
        }
    }
    ensure(conditional > 0, || "mesh condition never held".into())?;
    Ok(format!("survival lower bound exercised {conditional} times, min slack {slack:.2e}"))
}

fn qubit_scenario() -> String {
    format!(
        r#"{{"name": "qubit", "dim": 2, "hamiltonian": {{"kind": "pauli_x"}},
            "state": {{"eigenvalues": [0.7, 0.3]}}, "curve": {{"kind": "static"}},
            "tau": 1.0, "partitions": {{"kind": "uniform", "n": {REFINE:?}}}}}"#
    )
}

fn unitary_scenario() -> String {
    format!(
        r#"{{"name": "unitary-d4", "dim": 4,
            "hamiltonian": {{"kind": "random", "seed": 101, "scale": 0.5}},
            "state": {{"eigenvalues": [0.4, 0.3, 0.2, 0.1], "basis": {{"kind": "random", "seed": 103}}}},
            "curve": {{"kind": "generated", "generator": {{"kind": "random", "seed": 102, "scale": 0.5}}}},
            "tau": 1.0, "partitions": {{"kind": "uniform", "n": {REFINE:?}}}}}"#
    )
}

fn slope(ns: &[f64], values: &[f64]) -> Result<f64, String> {
    fit_loglog(ns, values).map(|f| f.slope).map_err(|e| e.to_string())
}

fn qubit_convergence() -> Outcome {
    let start = Instant::now();
    let h = zenolab::numerics::pauli_x();
    let curve = BasisCurve::fixed(CMatrix::identity(2, 2), 1.0).map_err(|e| e.to_string())?;
    let rho = DensityMatrix::new(zenolab::numerics::diagonal(&[0.7, 0.3])).map_err(|e| e.to_string())?;
    let mut td = Vec::new();
    for &n in &REFINE {
        let p = Partition::uniform(1.0, n).map_err(|e| e.to_string())?;
        let r = run_measurement(&rho, &h, &curve, &p).map_err(|e| e.to_string())?;
        let coeff: f64 = r.lambda_delta.iter().zip(&r.lambdas).map(|(a, b)| (a - b).abs()).sum();
        ensure((r.trace_distance_to_target - coeff).abs() <= 1e-8, || format!("N={n}: proof identity"))?;
        let bound = 2.0 - 2.0 * r.lambdas.iter().zip(&r.gamma).map(|(l, g)| l * g).sum::<f64>();
        ensure(r.trace_distance_to_target <= bound + 1e-9, || format!("N={n}: above 2 - 2 sum lambda gamma"))?;
        td.push(r.trace_distance_to_target);
    }
    ensure(td.windows(2).all(|w| w[1] < w[0]), || format!("not strictly decreasing: {td:?}"))?;
    let last = *td.last().unwrap();
    ensure(last <= 2e-3, || format!("final distance {last:.3e}"))?;
    let ns: Vec<f64> = REFINE.iter().map(|&n| n as f64).collect();
    let s = slope(&ns, &td)?;
    ensure((-1.15..=-0.85).contains(&s), || format!("slope {s:.4}"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!("final distance {last:.3e}, slope {s:.4}, {secs:.2} s"))
}

fn unitary_approximation() -> Outcome {
    let d = 4;
    let h = random::hermitian(d, &mut random::rng(101)) * c(0.5, 0.0);
    let a = random::hermitian(d, &mut random::rng(102)) * c(0.5, 0.0);
    let base = random::unitary(d, &mut random::rng(103));
    let rho = DensityMatrix::from_spectrum(&[0.4, 0.3, 0.2, 0.1], &base).map_err(|e| e.to_string())?;
    let curve = BasisCurve::generated(a.clone(), base, 1.0).map_err(|e| e.to_string())?;
    let u = unitary_exponential(&a, 1.0).map_err(|e| e.to_string())?;
    let target = &u * rho.matrix() * u.adjoint();
    let mut td = Vec::new();
    for &n in &REFINE {
        let p = Partition::uniform(1.0, n).map_err(|e| e.to_string())?;
        let out = evolve_by_channels(&rho, &h, &curve, &p).map_err(|e| e.to_string())?;
        td.push(trace_norm(&(out.matrix() - &target)).map_err(|e| e.to_string())?);
    }
    let last = *td.last().unwrap();
    ensure(last < 5e-3, || format!("distance at N=1024 is {last:.3e}"))?;
    let ns: Vec<f64> = REFINE.iter().map(|&n| n as f64).collect();
    let s = slope(&ns, &td)?;
    ensure((-1.2..=-0.8).contains(&s), || format!("slope {s:.4}"))?;
    Ok(format!("distance {:.3e} -> {last:.3e}, slope {s:.4}", td[0]))
}

fn zeno_exactness() -> Outcome {
    let mut worst = 0.0_f64;
    let mut runs = 0;
    for (i, d) in [2usize, 3, 5, 8].into_iter().enumerate() {
        let mut rng = random::rng(900 + i as u64);
        let base = random::unitary(d, &mut rng);
        let lambdas = random::spectrum(d, &mut rng);
        let energies: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let h = spectral_sum(&energies, &base);
        let rho = DensityMatrix::from_spectrum(&lambdas, &base).map_err(|e| e.to_string())?;
        // a generator that is a function of H only rephases the curve vectors
        let phases: Vec<f64> = energies.iter().map(|e| 0.7 * e * e).collect();
        let curves = [
            BasisCurve::fixed(base.clone(), 1.3).map_err(|e| e.to_string())?,
            BasisCurve::generated(spectral_sum(&phases, &base), base.clone(), 1.3)
                .map_err(|e| e.to_string())?,
        ];
        for curve in &curves {
            for n in [1, 7, 100] {
                let seed = rng.random();
                for p in [Partition::uniform(1.3, n), Partition::random(1.3, n, seed)] {
                    let p = p.map_err(|e| e.to_string())?;
                    let r = run_measurement(&rho, &h, curve, &p).map_err(|e| e.to_string())?;
                    ensure(r.trace_distance_to_target <= 1e-10, || {
                        format!("d={d} N={n}: distance {:.3e}", r.trace_distance_to_target)
                    })?;
                    worst = worst.max(r.trace_distance_to_target);
                    runs += 1;
                }
            }
        }
    }
    Ok(format!("{runs} runs, max distance {worst:.2e}"))
}

fn entropy_convergence() -> Outcome {
    let mut notes = Vec::new();
    for text in [qubit_scenario(), unitary_scenario()] {
        let sc = parse_scenario(&text).map_err(|e| e.to_string())?;
        let setup = sc.setup().map_err(|e| e.to_string())?;
        let out = run_sweep(&sc).map_err(|e| e.to_string())?;
        ensure(out.passed(), || out.violations.join("; "))?;
        let gaps: Vec<f64> = out.records.iter().map(|r| r.entropy_gap).collect();
        let last = *gaps.last().unwrap();
        ensure(last <= 5e-3 && last < gaps[0], || format!("{}: entropy gaps {gaps:?}", out.scenario))?;

        let d = setup.curve.dim();
        let lambdas = initial_lambdas(&setup.rho, &setup.curve).map_err(|e| e.to_string())?;
        let mut worst_slack = f64::INFINITY;
        let mut fannes_checked = 0;
        for p in &setup.partitions {
            let r = run_measurement(&setup.rho, &setup.h, &setup.curve, p).map_err(|e| e.to_string())?;
            let f = fannes_bound(&r.rho_final, &r.target).map_err(|e| e.to_string())?;
            let gap = (von_neumann_entropy(&r.rho_final).map_err(|e| e.to_string())?
                - von_neumann_entropy(&r.target).map_err(|e| e.to_string())?)
            .abs();
            if f.applicable {
                fannes_checked += 1;
                ensure(gap <= f.bound + 1e-9, || format!("N={}: Fannes violated", p.steps()))?;
            }
            let mut xis = Vec::with_capacity(d);
            let mut etas = Vec::with_capacity(d);
            for k in 0..d {
                xis.push(xi_covering(&setup.curve, &setup.h, k, DEFAULT_GRID, p.times()).map_err(|e| e.to_string())?);
                etas.push(eta(&setup.curve, k).map_err(|e| e.to_string())?);
            }
            if p.sumsq() < 0.5 {
                let sigma = sigma_dominator(&lambdas, &xis, &etas, &setup.curve, p.tau())
                    .map_err(|e| e.to_string())?;
                let slack = domination_slack(&sigma, r.rho_final.matrix()).map_err(|e| e.to_string())?;
                ensure(slack >= -1e-8, || format!("N={}: domination slack {slack:.3e}", p.steps()))?;
                worst_slack = worst_slack.min(slack);
            }
            let rep = entropy_conditions(&lambdas, &xis, &etas, d).map_err(|e| e.to_string())?;
            ensure(rep.s_sigma <= rep.s_rho + rep.sum_phi_xi2 + rep.sum_phi_eta2 + 1e-9, || {
                format!("N={}: S(sigma) inequality", p.steps())
            })?;
        }
        notes.push(format!(
            "{}: gap {last:.2e}, Fannes checked {fannes_checked}x, min slack {worst_slack:.2e}",
            out.scenario
        ));
    }
    Ok(notes.join("; "))
}

fn curve_regularity(cases: &[CorpusCase]) -> Outcome {
    let mut worst_identity = 0.0_f64;
    let mut witnesses = 0;
    for case in cases {
        let curve = &case.curve;
        let tau = case.partition.tau();
        let n = case.partition.steps();
        // sampled curves only admit grid partitions; 128 grid steps
        let uniform_n = match case.variant {
            Variant::Sampled => 1usize << (usize::BITS - 1 - n.leading_zeros()).min(7),
            _ => n,
        };
        let uniform = Partition::uniform(tau, uniform_n).map_err(|e| e.to_string())?;
        for k in 0..curve.dim() {
            let e = eta(curve, k).map_err(|e| e.to_string())?;
            for p in [&case.partition, &uniform] {
                let a3 = a3_sum(curve, p, k).map_err(|e| e.to_string())?;
                let chord = a3_sum_chordal(curve, p, k).map_err(|e| e.to_string())?;
                let gap = (a3 - chord).abs();
                ensure(gap <= 1e-10, || format!("case {} k={k}: a3 identity gap {gap:.3e}", case.index))?;
                worst_identity = worst_identity.max(gap);
            }
            let a3 = a3_sum(curve, &uniform, k).map_err(|e| e.to_string())?;
            let limit = e * e * tau * tau / (2.0 * uniform_n as f64) + 1e-9;
            ensure(a3.abs() <= limit, || {
                format!("case {} k={k}: |a3| {:.3e} above {limit:.3e}", case.index, a3.abs())
            })?;
            let own = a3_sum(curve, &case.partition, k).map_err(|e| e.to_string())?;
            ensure(own.abs() <= 0.5 * e * e * case.partition.sumsq() + 1e-9, || {
                format!("case {} k={k}: |a3| above eta^2 sum dt^2 / 2", case.index)
            })?;
        }
        if case.variant == Variant::Generated {
            let mut rng = random::rng(case.seed);
            for _ in 0..16 {
                let (s, t) = (rng.random_range(0.0..tau), rng.random_range(0.0..tau));
                let ps = curve.evaluate(s).map_err(|e| e.to_string())?;
                let pt = curve.evaluate(t).map_err(|e| e.to_string())?;
                for k in 0..curve.dim() {
                    let e = eta(curve, k).map_err(|e| e.to_string())?;
                    let gap = (pt.column(k) - ps.column(k)).norm();
                    ensure(gap <= e * (t - s).abs() + 1e-10, || {
                        format!("case {} k={k}: Lipschitz witness fails", case.index)
                    })?;
                    witnesses += 1;
                }
            }
        }
    }
    Ok(format!("{witnesses} Lipschitz witnesses, max a3 identity gap {worst_identity:.2e}"))
}

fn determinism() -> Outcome {
    let run = || {
        let mut out = Vec::new();
        let code = main_with(["zenolab", "check", "--seed", "42"], &mut out);
        (code, out)
    };
    let (c1, a) = run();
    let (c2, b) = run();
    ensure(c1 == 0 && c2 == 0, || format!("exit codes {c1}, {c2}"))?;
    ensure(a == b, || "reports differ".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() {
    let cases = corpus();
    let criteria: Vec<Criterion> = vec![
        ("dual-route equivalence", Box::new(|| dual_route(&cases))),
        ("leakage identity and path sum", Box::new(|| leakage_identity(&cases))),
        ("bound dominance", Box::new(|| bound_dominance(&cases))),
        ("qubit convergence", Box::new(qubit_convergence)),
        ("unitary channel approximation", Box::new(unitary_approximation)),
        ("Zeno exactness", Box::new(zeno_exactness)),
        ("entropy convergence", Box::new(entropy_convergence)),
        ("curve regularity", Box::new(|| curve_regularity(&cases))),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
