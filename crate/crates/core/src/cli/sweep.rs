//! Refinement sweeps, CSV output and log-log rate fits.

use rayon::prelude::*;
use serde::Serialize;

use super::scenario::{Check, Scenario, Setup};
use crate::bounds::{
    bound_report, domination_slack, entropy_conditions, sigma_dominator,
};
use crate::curves::{eta, xi_covering, BasisCurve, CurveKind, COMMUTE_TOL};
use crate::error::{Error, Result};
use crate::measurement::{run_measurement, Partition};
use crate::numerics::CMatrix;
use crate::states::{fannes_bound, von_neumann_entropy};

pub const SCHEMA_LINE: &str = "#schema=1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub mesh: f64,
    pub sumsq: f64,
    pub trace_distance: f64,
    pub trace_bound: f64,
    /// S(ρ_Δ(τ))
    pub entropy: f64,
    /// |S(ρ_Δ(τ)) − S(ρ)|
    pub entropy_gap: f64,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub eps: Vec<f64>,
    pub eps_bound: Vec<f64>,
    pub gamma_lb: Vec<f64>,
    pub a3: Vec<f64>,
    pub fannes_applicable: bool,
    pub fannes_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub scenario: String,
    pub records: Vec<SweepRecord>,
    /// Failed inequalities, each prefixed with the partition size.
    pub violations: Vec<String>,
}

impl SweepOutcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Whether H commutes with every projector |Ψ_k(t)><Ψ_k(t)| of the curve.
/// Only static curves, and generated ones with a commuting generator, are
/// considered; sampled curves are never treated as commuting.
pub fn commutes_with_curve(h: &CMatrix, curve: &BasisCurve) -> Result<bool> {
    let base = match curve.kind() {
        CurveKind::Static { base } => base,
        CurveKind::Generated { generator, base, .. } => {
            if crate::curves::commutator_norm(generator, h)? > COMMUTE_TOL {
                return Ok(false);
            }
            base
        }
        CurveKind::Sampled { .. } => return Ok(false),
    };
    for psi in base.column_iter() {
        let p = psi * psi.adjoint();
        if (h * &p - &p * h).norm() > COMMUTE_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs one partition and appends any failed inequality to `violations`.
pub fn sweep_point(
    scenario: &Scenario,
    setup: &Setup,
    partition: &Partition,
    violations: &mut Vec<String>,
) -> Result<SweepRecord> {
    let Setup { h, rho, curve, .. } = setup;
    let n = partition.steps();
    let result = run_measurement(rho, h, curve, partition)?;
    let report = bound_report(&result, curve, h, partition, scenario.a, scenario.grid)?;
    let checks = &scenario.checks;

    if checks.contains(&Check::Bounds) {
        violations.extend(report.violations.iter().map(|v| format!("N={n}: {v}")));
    }
    let entropy = von_neumann_entropy(&result.rho_final)?;
    let s0 = crate::states::entropy_of_spectrum(&result.lambdas);
    let fannes = fannes_bound(&result.rho_final, &result.target)?;
    let entropy_gap = (entropy - s0).abs();
    if checks.contains(&Check::Entropy) {
        if !fannes.admits(entropy_gap, 1e-9) {
            violations.push(format!(
                "N={n}: entropy gap {entropy_gap:.6e} exceeds Fannes bound {:.6e}",
                fannes.bound
            ));
        }
        if partition.sumsq() < 0.5 {
            let xis: Vec<f64> = report.records.iter().map(|r| r.xi).collect();
            let etas: Vec<f64> = report.records.iter().map(|r| r.eta).collect();
            let sigma = sigma_dominator(&result.lambdas, &xis, &etas, curve, partition.tau())?;
            let slack = domination_slack(&sigma, result.rho_final.matrix())?;
            if slack < -1e-8 {
                violations.push(format!("N={n}: rho_delta not dominated by sigma, slack {slack:.3e}"));
            }
        }
    }
    if checks.contains(&Check::Zeno)
        && commutes_with_curve(h, curve)?
        && result.trace_distance_to_target > 1e-10
    {
        violations.push(format!(
            "N={n}: commuting Hamiltonian but trace distance {:.3e}",
            result.trace_distance_to_target
        ));
    }

    Ok(SweepRecord {
        n,
        mesh: partition.mesh(),
        sumsq: partition.sumsq(),
        trace_distance: result.trace_distance_to_target,
        trace_bound: result.trace_bound,
        entropy,
        entropy_gap,
        lambda: result.lambda_delta.clone(),
        gamma: result.gamma.clone(),
        eps: result.epsilon.clone(),
        eps_bound: report.records.iter().map(|r| r.epsilon_bound).collect(),
        gamma_lb: report.records.iter().map(|r| r.gamma_lower).collect(),
        a3: report.records.iter().map(|r| r.a3).collect(),
        fannes_applicable: fannes.applicable,
        fannes_bound: fannes.bound,
    })
}

/// Thread count from ZENOLAB_THREADS, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("ZENOLAB_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` on a pool capped by ZENOLAB_THREADS, or on the global pool.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_cap().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// One record per partition in the plan, in plan order. Invariant
/// violations inside the measurement abort the sweep; failed bound
/// inequalities are collected in the outcome.
pub fn run_sweep(scenario: &Scenario) -> std::result::Result<SweepOutcome, super::CliError> {
    let setup = scenario.setup()?;
    let label = scenario.label();
    let points: Vec<Result<(SweepRecord, Vec<String>)>> = with_pool(|| {
        setup
            .partitions
            .par_iter()
            .map(|p| {
                let mut v = Vec::new();
                sweep_point(scenario, &setup, p, &mut v).map(|r| (r, v))
            })
            .collect()
    });
    let mut records = Vec::with_capacity(points.len());
    let mut violations = Vec::new();
    for (p, point) in setup.partitions.iter().zip(points) {
        match point {
            Ok((r, v)) => {
                records.push(r);
                violations.extend(v);
            }
            Err(e) => {
                return Err(super::CliError::Failure(format!(
                    "scenario {label}, N={}: {e}",
                    p.steps()
                )))
            }
        }
    }
    if scenario.checks.contains(&Check::Entropy) {
        let extra = scenario_entropy_violations(&setup, scenario)
            .map_err(|e| super::CliError::Failure(format!("scenario {label}: {e}")))?;
        violations.extend(extra);
    }
    Ok(SweepOutcome { scenario: label, records, violations })
}

fn scenario_entropy_violations(setup: &Setup, scenario: &Scenario) -> Result<Vec<String>> {
    let d = setup.curve.dim();
    let lambdas = crate::measurement::initial_lambdas(&setup.rho, &setup.curve)?;
    let mut xis = Vec::with_capacity(d);
    let mut etas = Vec::with_capacity(d);
    let times: Vec<f64> =
        setup.partitions.iter().flat_map(|p| p.times().iter().copied()).collect();
    for k in 0..d {
        xis.push(xi_covering(&setup.curve, &setup.h, k, scenario.grid, &times)?);
        etas.push(eta(&setup.curve, k)?);
    }
    let report = entropy_conditions(&lambdas, &xis, &etas, d)?;
    let mut out = Vec::new();
    if !report.sigma_bound_holds {
        out.push(format!(
            "S(sigma) = {:.6e} exceeds S(rho) + sum phi(xi^2) + sum phi(eta^2) = {:.6e}",
            report.s_sigma,
            report.s_rho + report.sum_phi_xi2 + report.sum_phi_eta2
        ));
    }
    if !report.subadditive {
        out.push("phi subadditivity failed at some index".into());
    }
    if report.tail.as_ref().is_some_and(|t| !t.holds) {
        out.push("tail entropy comparison failed".into());
    }
    Ok(out)
}

pub fn csv_header(d: usize) -> Vec<String> {
    let mut cols: Vec<String> =
        ["N", "mesh", "sumsq", "trace_distance", "trace_bound", "entropy", "entropy_gap"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    for k in 1..=d {
        for name in ["lambda", "gamma", "eps", "eps_bound", "gamma_lb", "a3"] {
            cols.push(format!("{name}_{k}"));
        }
    }
    cols.push("fannes_applicable".into());
    cols.push("fannes_bound".into());
    cols
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with a `#schema=1` first line. Floats carry 17 significant
/// digits, so parsing reproduces them exactly.
pub fn to_csv(records: &[SweepRecord]) -> Result<String> {
    let d = records.first().map_or(0, |r| r.lambda.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(csv_header(d)).map_err(io)?;
    for r in records {
        let mut row = vec![
            r.n.to_string(),
            num(r.mesh),
            num(r.sumsq),
            num(r.trace_distance),
            num(r.trace_bound),
            num(r.entropy),
            num(r.entropy_gap),
        ];
        for k in 0..d {
            for v in [r.lambda[k], r.gamma[k], r.eps[k], r.eps_bound[k], r.gamma_lb[k], r.a3[k]] {
                row.push(num(v));
            }
        }
        row.push(r.fannes_applicable.to_string());
        row.push(num(r.fannes_bound));
        w.write_record(&row).map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(format!("{SCHEMA_LINE}\n{}", String::from_utf8_lossy(&body)))
}

/// Header and rows of a sweep CSV, skipping `#` comment lines.
pub fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let bad = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(bad)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(bad)?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

pub fn from_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let (header, rows) = read_table(text)?;
    let d = header.len().saturating_sub(9) / 6;
    if header != csv_header(d) {
        return Err(Error::InvalidArgument("csv: unexpected column layout".into()));
    }
    let f = |s: &str| s.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("csv: {s}: {e}")));
    rows.iter()
        .map(|row| {
            let block = |j: usize| -> Result<Vec<f64>> {
                (0..d).map(|k| f(&row[7 + 6 * k + j])).collect()
            };
            Ok(SweepRecord {
                n: row[0].parse().map_err(|e| Error::InvalidArgument(format!("csv: N: {e}")))?,
                mesh: f(&row[1])?,
                sumsq: f(&row[2])?,
                trace_distance: f(&row[3])?,
                trace_bound: f(&row[4])?,
                entropy: f(&row[5])?,
                entropy_gap: f(&row[6])?,
                lambda: block(0)?,
                gamma: block(1)?,
                eps: block(2)?,
                eps_bound: block(3)?,
                gamma_lb: block(4)?,
                a3: block(5)?,
                fannes_applicable: row[7 + 6 * d]
                    .parse()
                    .map_err(|e| Error::InvalidArgument(format!("csv: fannes_applicable: {e}")))?,
                fannes_bound: f(&row[8 + 6 * d])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Euclidean norm of the residuals in log space.
    pub residual: f64,
}

/// Least-squares line through (ln N, ln value).
pub fn fit_loglog(ns: &[f64], values: &[f64]) -> Result<RateFit> {
    if ns.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: ns.len(), found: values.len() });
    }
    if ns.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 points, got {}", ns.len())));
    }
    if let Some(v) = ns.iter().chain(values).find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!("nonpositive value {v} in log-log fit")));
    }
    let x: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual =
        x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>().sqrt();
    Ok(RateFit { slope, intercept, residual })
}

/// Values of a named CSV column from in-memory records.
pub fn column(records: &[SweepRecord], name: &str) -> Result<Vec<f64>> {
    let csv = to_csv(records)?;
    let (header, rows) = read_table(&csv)?;
    column_of_table(&header, &rows, name)
}

pub fn column_of_table(header: &[String], rows: &[Vec<String>], name: &str) -> Result<Vec<f64>> {
    let j = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::InvalidArgument(format!("no column {name}")))?;
    rows.iter()
        .map(|r| r[j].parse::<f64>().map_err(|e| Error::InvalidArgument(format!("{name}: {e}"))))
        .collect()
}

pub fn fit_rate(records: &[SweepRecord], name: &str) -> Result<RateFit> {
    let ns: Vec<f64> = records.iter().map(|r| r.n as f64).collect();
    fit_loglog(&ns, &column(records, name)?)
}

/// Gnuplot script plotting `columns` of `csv_path` against N on log axes.
pub fn gnuplot_script(csv_path: &str, header: &[String], columns: &[String]) -> Result<String> {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset logscale xy\nset key autotitle columnhead\n");
    s.push_str("set xlabel 'N'\n");
    let mut plots = Vec::new();
    for name in columns {
        let j = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no column {name}")))?;
        plots.push(format!("'{csv_path}' using 1:{} with linespoints", j + 1));
    }
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    Ok(s)
}
