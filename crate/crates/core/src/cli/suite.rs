//! Seeded scenario corpus exercising every module invariant.

use rand::Rng;
use rayon::prelude::*;

use super::scenario::grid_partition;
use super::sweep::{commutes_with_curve, with_pool};
use crate::bounds::{bound_report, domination_slack, entropy_conditions, sigma_dominator};
use crate::channels::{rank1_family, validate_projection_family};
use crate::curves::{a3_sum, a3_sum_chordal, eta, xi_covering, BasisCurve, CurveKind};
use crate::measurement::{leak_by_path_enumeration, run_measurement, Partition};
use crate::numerics::{c, random, unitary_exponential, CMatrix, COMPOSED_TOL, STRUCT_TOL};
use crate::states::{fannes_bound, spectral_sum, von_neumann_entropy, DensityMatrix};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SIZE: usize = 200;
const SAMPLED_GRID: usize = 129;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Static,
    Generated,
    Sampled,
    /// Static curve with a Hamiltonian diagonal in the curve basis.
    Zeno,
}

impl Variant {
    fn name(self) -> &'static str {
        match self {
            Variant::Static => "static",
            Variant::Generated => "generated",
            Variant::Sampled => "sampled",
            Variant::Zeno => "zeno",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusCase {
    pub index: usize,
    pub seed: u64,
    pub variant: Variant,
    pub rho: DensityMatrix,
    pub h: CMatrix,
    pub curve: BasisCurve,
    pub partition: Partition,
    pub random_partition: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Run only this scenario index.
    pub only: Option<usize>,
    /// Drop one projector from this scenario's measurement families.
    pub corrupt: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub lines: Vec<String>,
    pub failures: usize,
    pub total: usize,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

/// Per-scenario seed; depends only on the corpus seed and the index, so a
/// single case can be replayed alone.
pub fn case_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

/// Builds scenario `index` of the corpus. Dimensions cycle through 2..=8
/// and curve variants through all four kinds.
pub fn corpus_case(seed: u64, index: usize) -> crate::Result<CorpusCase> {
    let case = case_seed(seed, index);
    let mut rng = random::rng(case);
    let d = 2 + index % 7;
    let variant = [Variant::Static, Variant::Generated, Variant::Sampled, Variant::Zeno]
        [(index / 7) % 4];
    let tau = rng.random_range(0.5..2.0);
    let n = rng.random_range(1..=64);
    let random_partition = rng.random_bool(0.5);
    let base = random::unitary(d, &mut rng);
    let lambdas = random::spectrum(d, &mut rng);
    let rho = DensityMatrix::from_spectrum(&lambdas, &base)?;
    let h_scale = rng.random_range(0.2..1.5);
    let h = match variant {
        Variant::Zeno => {
            let energies: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            spectral_sum(&energies, &base)
        }
        _ => random::hermitian(d, &mut rng) * c(h_scale, 0.0),
    };
    let curve = match variant {
        Variant::Static | Variant::Zeno => BasisCurve::fixed(base, tau)?,
        Variant::Generated => {
            let a = random::hermitian(d, &mut rng) * c(rng.random_range(0.2..1.0), 0.0);
            BasisCurve::generated(a, base, tau)?
        }
        Variant::Sampled => {
            let a = random::hermitian(d, &mut rng) * c(0.5, 0.0);
            let b = random::hermitian(d, &mut rng) * c(0.5, 0.0);
            let times: Vec<f64> = (0..SAMPLED_GRID)
                .map(|i| if i + 1 == SAMPLED_GRID { tau } else { tau * i as f64 / (SAMPLED_GRID - 1) as f64 })
                .collect();
            let frames = times
                .iter()
                .map(|&t| Ok(unitary_exponential(&a, t)? * unitary_exponential(&b, t * t)? * &base))
                .collect::<crate::Result<Vec<_>>>()?;
            BasisCurve::sampled(times, frames)?
        }
    };
    let partition = match (curve.kind(), random_partition) {
        (CurveKind::Sampled { times, .. }, _) => grid_partition(times, n, rng.random())?,
        (_, true) => Partition::random(tau, n, rng.random())?,
        (_, false) => Partition::uniform(tau, n)?,
    };
    let random_partition = random_partition || variant == Variant::Sampled;
    Ok(CorpusCase { index, seed: case, variant, rho, h, curve, partition, random_partition })
}

/// Every assertion for one corpus case. Returns the failed ones.
pub fn check_case(case: &CorpusCase, corrupt: bool) -> crate::Result<Vec<String>> {
    let mut fails = Vec::new();
    let CorpusCase { rho, h, curve, partition, .. } = case;
    let d = curve.dim();
    let n = partition.steps();

    for (j, frame) in curve.frames_on(partition)?.iter().enumerate().skip(1) {
        let fam = rank1_family(frame)?;
        let projectors = if corrupt { &fam.projectors()[1..] } else { fam.projectors() };
        let violations = validate_projection_family(projectors).violations(COMPOSED_TOL);
        if !violations.is_empty() {
            fails.push(format!("projection family at t_{j}: {}", violations.join(", ")));
            break;
        }
    }

    let result = match run_measurement(rho, h, curve, partition) {
        Ok(r) => r,
        Err(e) => {
            fails.push(format!("measurement: {e}"));
            return Ok(fails);
        }
    };

    for k in 0..d {
        let recomposed = result.lambdas[k] * result.gamma[k] + result.epsilon[k];
        if (recomposed - result.lambda_delta[k]).abs() > COMPOSED_TOL {
            fails.push(format!("k={k}: lambda_delta != lambda gamma + eps"));
        }
    }
    if d == 2 && n <= 6 {
        for k in 0..d {
            let brute = leak_by_path_enumeration(&result.lambdas, curve, h, partition, k)?;
            if (brute - result.epsilon[k]).abs() > STRUCT_TOL {
                fails.push(format!(
                    "k={k}: path sum {brute:.17e} vs residual {:.17e}",
                    result.epsilon[k]
                ));
            }
        }
    }

    for a in [1.5, 2.0, 4.0] {
        let rep = bound_report(&result, curve, h, partition, a, crate::curves::DEFAULT_GRID)?;
        fails.extend(rep.violations.into_iter().map(|v| format!("a={a}: {v}")));
    }

    if commutes_with_curve(h, curve)? && result.trace_distance_to_target > STRUCT_TOL {
        fails.push(format!("zeno: trace distance {:.3e}", result.trace_distance_to_target));
    }

    let tau = partition.tau();
    let mut xis = Vec::with_capacity(d);
    let mut etas = Vec::with_capacity(d);
    for k in 0..d {
        let a3 = a3_sum(curve, partition, k)?;
        let chord = a3_sum_chordal(curve, partition, k)?;
        if (a3 - chord).abs() > STRUCT_TOL {
            fails.push(format!("k={k}: a3 {a3:.6e} vs -1/2 sum |dpsi|^2 {chord:.6e}"));
        }
        let eta_k = eta(curve, k)?;
        // ½η²ΣΔ², which is η²τ²/(2N) on a uniform partition
        let decay = 0.5 * eta_k * eta_k * partition.sumsq();
        if a3.abs() > decay + 1e-9 {
            fails.push(format!("k={k}: |a3| {:.6e} above eta^2 sum dt^2 / 2 = {decay:.6e}", a3.abs()));
        }
        if !case.random_partition {
            let uniform = eta_k * eta_k * tau * tau / (2.0 * n as f64);
            if a3.abs() > uniform + 1e-9 {
                fails.push(format!("k={k}: |a3| above eta^2 tau^2 / 2N"));
            }
        }
        xis.push(xi_covering(curve, h, k, crate::curves::DEFAULT_GRID, partition.times())?);
        etas.push(eta_k);
    }

    if case.variant == Variant::Generated {
        let mut rng = random::rng(case.seed ^ 0x5EED);
        let eta_max = etas.iter().copied().fold(0.0, f64::max);
        for _ in 0..8 {
            let (s, t) = (rng.random_range(0.0..tau), rng.random_range(0.0..tau));
            let gap = (curve.evaluate(t)? - curve.evaluate(s)?)
                .column_iter()
                .map(|col| col.norm())
                .fold(0.0, f64::max);
            if gap > eta_max * (t - s).abs() + STRUCT_TOL {
                fails.push(format!("lipschitz witness fails at s={s:.6}, t={t:.6}"));
            }
        }
    }

    let entropy = entropy_conditions(&result.lambdas, &xis, &etas, d)?;
    if !entropy.holds() {
        fails.push("entropy inequalities".into());
    }
    let fannes = fannes_bound(&result.rho_final, &result.target)?;
    let gap = (von_neumann_entropy(&result.rho_final)? - von_neumann_entropy(&result.target)?).abs();
    if !fannes.admits(gap, COMPOSED_TOL) {
        fails.push(format!("fannes: gap {gap:.6e} above {:.6e}", fannes.bound));
    }
    if partition.sumsq() < 0.5 {
        let sigma = sigma_dominator(&result.lambdas, &xis, &etas, curve, tau)?;
        let slack = domination_slack(&sigma, result.rho_final.matrix())?;
        if slack < -1e-8 {
            fails.push(format!("sigma domination slack {slack:.3e}"));
        }
    }
    Ok(fails)
}

fn case_line(seed: u64, index: usize, corrupt: bool) -> (String, bool) {
    let case = match corpus_case(seed, index) {
        Ok(c) => c,
        Err(e) => return (format!("case {index:03}: FAIL setup: {e}"), false),
    };
    let head = format!(
        "case {index:03} d={} curve={} N={} partition={}",
        case.curve.dim(),
        case.variant.name(),
        case.partition.steps(),
        if case.random_partition { "random" } else { "uniform" },
    );
    match check_case(&case, corrupt) {
        Ok(f) if f.is_empty() => (format!("{head}: ok"), true),
        Ok(f) => (format!("{head}: FAIL {}", f.join("; ")), false),
        Err(e) => (format!("{head}: FAIL error: {e}"), false),
    }
}

/// Runs the corpus. The report text depends only on `seed`, `size` and
/// the options, never on thread scheduling.
pub fn check_suite(seed: u64, size: usize, options: &SuiteOptions) -> SuiteReport {
    let indices: Vec<usize> = match options.only {
        Some(i) => vec![i],
        None => (0..size).collect(),
    };
    let results: Vec<(String, bool)> = with_pool(|| {
        indices.par_iter().map(|&i| case_line(seed, i, options.corrupt == Some(i))).collect()
    });
    let failures = results.iter().filter(|(_, ok)| !ok).count();
    let total = results.len();
    let mut lines = vec![format!("check seed={seed} size={size}")];
    lines.extend(results.into_iter().map(|(l, _)| l));
    lines.push(format!(
        "summary: {} passed, {failures} failed, {total} total",
        total - failures
    ));
    if failures > 0 {
        lines.push(format!("replay one case with: zenolab check --seed {seed} --only <case>"));
    }
    SuiteReport { lines, failures, total }
}
