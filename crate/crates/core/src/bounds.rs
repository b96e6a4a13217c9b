//! Explicit estimates for the measurement protocol and checkers for the
//! hypotheses behind them.
//!
//! Per index k, with ξ_k = sup‖HΨ_k(t)‖, η_k the Lipschitz constant of
//! Ψ_k(·), and a3_k = Σ_j Re<Ψ_k(t_j) − Ψ_k(t_{j−1}), Ψ_k(t_{j−1})>:
//!
//! * ε_{Δ,k} ≤ 2(ξ_k² + η_k²) Σ Δ_l²
//! * if (ξ² + 2ξη)|Δ|² + 2η|Δ| ≤ ln(a)/a for some a > 1, then
//!   exp(−a{(ξ² + 2ξη) Σ Δ_l² − 2 a3_k}) ≤ γ_{Δ,k} ≤ 1
//! * ‖ρ_Δ(τ) − ρ(τ)‖₁ ≤ 2 − 2 Σ_k λ_k γ_{Δ,k}
//!
//! The entropy side uses φ(x) = −x ln x and the dominating operator
//! σ = Σ_k (λ_k + ξ_k² + η_k²)|Ψ_k(τ)><Ψ_k(τ)|.

use std::f64::consts::E;

use crate::curves::{a3_sum, eta, xi, xi_covering, BasisCurve};
use crate::error::{Error, Result};
use crate::measurement::{MeasurementResult, Partition};
use crate::numerics::{hermitian_eigendecompose, CMatrix, COMPOSED_TOL};
use crate::states::{phi_nonneg, spectral_sum};

/// Slack allowed on γ ≤ 1 and γ ≥ γ_lower.
pub const GAMMA_TOL: f64 = 1e-12;

/// 2(ξ² + η²) Σ Δ_l².
pub fn epsilon_upper_bound(xi: f64, eta: f64, partition: &Partition) -> f64 {
    2.0 * (xi * xi + eta * eta) * partition.sumsq()
}

/// (ξ² + 2ξη)|Δ|² + 2η|Δ| ≤ ln(a)/a.
pub fn mesh_condition(xi: f64, eta: f64, a: f64, mesh: f64) -> Result<bool> {
    if !(a > 1.0) {
        return Err(Error::InvalidArgument(format!("a must exceed 1, got {a}")));
    }
    let lhs = (xi * xi + 2.0 * xi * eta) * mesh * mesh + 2.0 * eta * mesh;
    Ok(lhs <= a.ln() / a)
}

fn exponent(xi: f64, eta: f64, a: f64, partition: &Partition, a3: f64) -> f64 {
    -a * ((xi * xi + 2.0 * xi * eta) * partition.sumsq() - 2.0 * a3)
}

/// exp(−a{(ξ² + 2ξη) Σ Δ² − 2 a3}). Only a bound when the mesh condition holds.
pub fn gamma_lower_bound(xi: f64, eta: f64, a: f64, partition: &Partition, a3: f64) -> f64 {
    exponent(xi, eta, a, partition, a3).exp()
}

/// λ_k (1 − exp(…)) + 2(ξ² + η²) Σ Δ².
pub fn lambda_error_bound(
    lambda: f64,
    xi: f64,
    eta: f64,
    a: f64,
    partition: &Partition,
    a3: f64,
) -> f64 {
    lambda * (1.0 - gamma_lower_bound(xi, eta, a, partition, a3))
        + epsilon_upper_bound(xi, eta, partition)
}

/// 2 − 2 Σ λ_k γ_k.
pub fn trace_norm_upper_bound(lambdas: &[f64], gammas: &[f64]) -> f64 {
    2.0 - 2.0 * lambdas.iter().zip(gammas).map(|(l, g)| l * g).sum::<f64>()
}

/// 2 − 2 Σ λ_k exp(−a{(ξ_k² + 2ξ_kη_k) Σ Δ² − 2 a3_k}), the closed-form
/// version of [`trace_norm_upper_bound`]. Valid when the mesh condition
/// holds for every k with λ_k > 0.
pub fn trace_norm_exp_bound(
    lambdas: &[f64],
    xis: &[f64],
    etas: &[f64],
    a3s: &[f64],
    a: f64,
    partition: &Partition,
) -> f64 {
    let survival: f64 = (0..lambdas.len())
        .map(|k| lambdas[k] * gamma_lower_bound(xis[k], etas[k], a, partition, a3s[k]))
        .sum();
    2.0 - 2.0 * survival
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexRecord {
    pub k: usize,
    pub lambda: f64,
    pub xi: f64,
    pub eta: f64,
    pub a3: f64,
    pub lambda_delta: f64,
    pub epsilon: f64,
    pub epsilon_bound: f64,
    pub gamma: f64,
    pub gamma_lower: f64,
    pub lambda_error_bound: f64,
    pub mesh_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub a: f64,
    pub mesh: f64,
    pub sumsq: f64,
    pub records: Vec<IndexRecord>,
    pub trace_distance: f64,
    pub trace_bound: f64,
    /// Closed-form trace bound, present when every λ_k > 0 index is mesh_ok.
    pub trace_exp_bound: Option<f64>,
    pub violations: Vec<String>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates every explicit estimate for one measurement run and records
/// each inequality that fails. Conditional bounds are only checked when
/// their mesh condition holds.
pub fn bound_report(
    result: &MeasurementResult,
    curve: &BasisCurve,
    h: &CMatrix,
    partition: &Partition,
    a: f64,
    grid: usize,
) -> Result<BoundReport> {
    if !(a > 1.0) {
        return Err(Error::InvalidArgument(format!("a must exceed 1, got {a}")));
    }
    let d = result.dim();
    let mesh = partition.mesh();
    let mut records = Vec::with_capacity(d);
    let mut violations = Vec::new();
    for k in 0..d {
        let xi_k = xi_covering(curve, h, k, grid, partition.times())?;
        let eta_k = eta(curve, k)?;
        let a3 = a3_sum(curve, partition, k)?;
        let mesh_ok = mesh_condition(xi_k, eta_k, a, mesh)?;
        let rec = IndexRecord {
            k,
            lambda: result.lambdas[k],
            xi: xi_k,
            eta: eta_k,
            a3,
            lambda_delta: result.lambda_delta[k],
            epsilon: result.epsilon[k],
            epsilon_bound: epsilon_upper_bound(xi_k, eta_k, partition),
            gamma: result.gamma[k],
            gamma_lower: gamma_lower_bound(xi_k, eta_k, a, partition, a3),
            lambda_error_bound: lambda_error_bound(
                result.lambdas[k],
                xi_k,
                eta_k,
                a,
                partition,
                a3,
            ),
            mesh_ok,
        };
        if rec.epsilon > rec.epsilon_bound + COMPOSED_TOL {
            violations.push(format!(
                "k={k}: epsilon {:.6e} exceeds 2(xi^2+eta^2)sum(dt^2) = {:.6e}",
                rec.epsilon, rec.epsilon_bound
            ));
        }
        if rec.gamma > 1.0 + GAMMA_TOL {
            violations.push(format!("k={k}: gamma {:.6e} exceeds 1", rec.gamma));
        }
        if mesh_ok {
            if rec.gamma_lower > rec.gamma + GAMMA_TOL {
                violations.push(format!(
                    "k={k}, a={a}: gamma {:.6e} below exp lower bound {:.6e}",
                    rec.gamma, rec.gamma_lower
                ));
            }
            let err = (rec.lambda_delta - rec.lambda).abs();
            if err > rec.lambda_error_bound + COMPOSED_TOL {
                violations.push(format!(
                    "k={k}, a={a}: |lambda_delta - lambda| = {err:.6e} exceeds {:.6e}",
                    rec.lambda_error_bound
                ));
            }
        }
        let err = (rec.lambda_delta - rec.lambda).abs();
        if err > result.trace_distance_to_target + COMPOSED_TOL {
            violations.push(format!(
                "k={k}: |lambda_delta - lambda| = {err:.6e} exceeds trace distance {:.6e}",
                result.trace_distance_to_target
            ));
        }
        records.push(rec);
    }

    let trace_bound = trace_norm_upper_bound(&result.lambdas, &result.gamma);
    if result.trace_distance_to_target > trace_bound + COMPOSED_TOL {
        violations.push(format!(
            "trace distance {:.6e} exceeds 2 - 2 sum lambda gamma = {trace_bound:.6e}",
            result.trace_distance_to_target
        ));
    }
    let all_ok = records.iter().all(|r| r.mesh_ok || r.lambda == 0.0);
    let trace_exp_bound = all_ok.then(|| {
        let xis: Vec<f64> = records.iter().map(|r| r.xi).collect();
        let etas: Vec<f64> = records.iter().map(|r| r.eta).collect();
        let a3s: Vec<f64> = records.iter().map(|r| r.a3).collect();
        trace_norm_exp_bound(&result.lambdas, &xis, &etas, &a3s, a, partition)
    });
    if let Some(b) = trace_exp_bound {
        if result.trace_distance_to_target > b + COMPOSED_TOL {
            violations.push(format!(
                "trace distance {:.6e} exceeds closed-form bound {b:.6e}",
                result.trace_distance_to_target
            ));
        }
    }

    Ok(BoundReport {
        a,
        mesh,
        sumsq: partition.sumsq(),
        records,
        trace_distance: result.trace_distance_to_target,
        trace_bound,
        trace_exp_bound,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub k: usize,
    pub xi: f64,
    pub eta: f64,
    /// (N, a3_k) along the refinement family.
    pub a3: Vec<(usize, f64)>,
    /// 1e-3 η² τ²
    pub threshold: f64,
    pub pass: bool,
}

/// Checks the hypotheses for pointwise convergence of λ_{Δ,k} along a
/// refinement family. Boundedness of ξ and η is automatic at finite
/// dimension; the condition on a3 passes when |a3| is nonincreasing along
/// the family, ends at or below 1e-3 η² τ², and has at least halved from the
/// first partition (or is identically zero).
pub fn check_theorem1_conditions(
    curve: &BasisCurve,
    h: &CMatrix,
    k: usize,
    family: &[Partition],
    grid: usize,
) -> Result<Theorem1Report> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty refinement family".into()));
    }
    let xi_k = xi(curve, h, k, grid)?;
    let eta_k = eta(curve, k)?;
    let a3: Vec<(usize, f64)> = family
        .iter()
        .map(|p| Ok((p.steps(), a3_sum(curve, p, k)?)))
        .collect::<Result<_>>()?;
    let tau = curve.tau();
    let threshold = 1e-3 * eta_k * eta_k * tau * tau;
    let mags: Vec<f64> = a3.iter().map(|(_, v)| v.abs()).collect();
    let first = mags[0];
    let last = *mags.last().unwrap();
    let nonincreasing = mags.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    let decayed = first == 0.0 || last <= 0.5 * first;
    let pass = xi_k.is_finite() && eta_k.is_finite() && nonincreasing && decayed && last <= threshold;
    Ok(Theorem1Report { k, xi: xi_k, eta: eta_k, a3, threshold, pass })
}

/// σ = Σ_k (λ_k + ξ_k² + η_k²) |Ψ_k(τ)><Ψ_k(τ)|.
pub fn sigma_dominator(
    lambdas: &[f64],
    xis: &[f64],
    etas: &[f64],
    curve: &BasisCurve,
    tau: f64,
) -> Result<CMatrix> {
    let d = curve.dim();
    for len in [lambdas.len(), xis.len(), etas.len()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, found: len });
        }
    }
    let weights: Vec<f64> =
        (0..d).map(|k| lambdas[k] + xis[k] * xis[k] + etas[k] * etas[k]).collect();
    Ok(spectral_sum(&weights, &curve.evaluate(tau)?))
}

/// Smallest eigenvalue of σ − ρ; nonnegative iff ρ ≤ σ.
pub fn domination_slack(sigma: &CMatrix, rho: &CMatrix) -> Result<f64> {
    let eig = hermitian_eigendecompose(&(sigma - rho))?;
    Ok(eig.values.first().copied().unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailCheck {
    /// First index N₀ from which every λ_k + ξ_k² + η_k² ≤ 1/e.
    pub start: usize,
    pub phi_lambda: f64,
    pub phi_xi2: f64,
    pub phi_eta2: f64,
    pub phi_sigma: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub k_trunc: usize,
    /// S(ρ) = Σ φ(λ_k)
    pub s_rho: f64,
    pub sum_phi_xi2: f64,
    pub sum_phi_eta2: f64,
    /// S(σ) = Σ φ(λ_k + ξ_k² + η_k²)
    pub s_sigma: f64,
    /// φ(λ+ξ²+η²) ≤ φ(λ) + φ(ξ²) + φ(η²) at every index.
    pub subadditive: bool,
    /// S(σ) ≤ S(ρ) + Σφ(ξ²) + Σφ(η²)
    pub sigma_bound_holds: bool,
    /// Tail comparison, or None when no index lies in the monotone region.
    pub tail: Option<TailCheck>,
    /// ξ and η nonincreasing in k with ξ², η² below 1/e over the last quartile.
    pub tail_decay: bool,
}

impl EntropyReport {
    /// Every asserted inequality holds. Tail decay is not included; it is a
    /// property of the scenario, not an inequality.
    pub fn holds(&self) -> bool {
        self.subadditive && self.sigma_bound_holds && self.tail.as_ref().is_none_or(|t| t.holds)
    }
}

pub fn entropy_conditions(
    lambdas: &[f64],
    xis: &[f64],
    etas: &[f64],
    k_trunc: usize,
) -> Result<EntropyReport> {
    let d = lambdas.len();
    if xis.len() != d || etas.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: xis.len().min(etas.len()) });
    }
    if k_trunc == 0 || k_trunc > d {
        return Err(Error::InvalidArgument(format!("truncation {k_trunc} not in 1..={d}")));
    }
    let lam = &lambdas[..k_trunc];
    let xi2: Vec<f64> = xis[..k_trunc].iter().map(|x| x * x).collect();
    let eta2: Vec<f64> = etas[..k_trunc].iter().map(|x| x * x).collect();
    let sig: Vec<f64> = (0..k_trunc).map(|k| lam[k] + xi2[k] + eta2[k]).collect();
    let sum_phi = |v: &[f64]| v.iter().map(|&x| phi_nonneg(x.max(0.0))).sum::<f64>();

    let s_rho = sum_phi(lam);
    let sum_phi_xi2 = sum_phi(&xi2);
    let sum_phi_eta2 = sum_phi(&eta2);
    let s_sigma = sum_phi(&sig);
    let subadditive = (0..k_trunc).all(|k| {
        phi_nonneg(sig[k]) <= phi_nonneg(lam[k]) + phi_nonneg(xi2[k]) + phi_nonneg(eta2[k]) + 1e-12
    });
    let sigma_bound_holds = s_sigma <= s_rho + sum_phi_xi2 + sum_phi_eta2 + COMPOSED_TOL;

    let inv_e = 1.0 / E;
    let start = sig.iter().rposition(|&s| s > inv_e).map_or(0, |i| i + 1);
    let tail = (start < k_trunc).then(|| {
        let phi_lambda = sum_phi(&lam[start..]);
        let phi_xi2 = sum_phi(&xi2[start..]);
        let phi_eta2 = sum_phi(&eta2[start..]);
        let phi_sigma = sum_phi(&sig[start..]);
        let holds = phi_lambda.max(phi_xi2).max(phi_eta2) <= phi_sigma + 1e-12;
        TailCheck { start, phi_lambda, phi_xi2, phi_eta2, phi_sigma, holds }
    });

    let nonincreasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let quartile = (3 * k_trunc).div_ceil(4).min(k_trunc - 1);
    let tail_decay = nonincreasing(&xis[..k_trunc])
        && nonincreasing(&etas[..k_trunc])
        && xi2[quartile..].iter().chain(&eta2[quartile..]).all(|&x| x < inv_e);

    Ok(EntropyReport {
        k_trunc,
        s_rho,
        sum_phi_xi2,
        sum_phi_eta2,
        s_sigma,
        subadditive,
        sigma_bound_holds,
        tail,
        tail_decay,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JensenPoint {
    pub t: f64,
    /// φ(‖HΨ_k(t)‖²)
    pub lhs: f64,
    /// Σ_x φ(x²) |<e_x, Ψ_k(t)>|²
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JensenReport {
    pub k: usize,
    pub xi: f64,
    /// ξ_k² ≤ 1/e
    pub applicable: bool,
    pub points: Vec<JensenPoint>,
    /// lhs ≥ rhs − 1e-9 at every point.
    pub jensen_holds: bool,
    /// φ(ξ_k²) ≥ max_t rhs − 1e-9.
    pub dominated_by_phi_xi2: bool,
    /// Σ_x φ(x²) over the spectrum of H.
    pub trace_phi_h2: f64,
}

impl JensenReport {
    pub fn verified(&self) -> bool {
        !self.applicable || (self.jensen_holds && self.dominated_by_phi_xi2)
    }
}

/// Tr φ(H²) = Σ_x φ(x²).
pub fn trace_phi_h2(h: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigendecompose(h)?.values.iter().map(|x| phi_nonneg(x * x)).sum())
}

pub fn jensen_check(h: &CMatrix, curve: &BasisCurve, k: usize, grid: usize) -> Result<JensenReport> {
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {grid}")));
    }
    let spectrum = hermitian_eigendecompose(h)?;
    let xi_k = xi(curve, h, k, grid)?;
    let phi_x2: Vec<f64> = spectrum.values.iter().map(|x| phi_nonneg(x * x)).collect();
    let tau = curve.tau();
    let mut points = Vec::with_capacity(grid);
    for i in 0..grid {
        let t = if i + 1 == grid { tau } else { tau * i as f64 / (grid - 1) as f64 };
        let psi = curve.evaluate(t)?.column(k).into_owned();
        let energy = (h * &psi).norm_squared();
        let rhs = spectrum
            .vectors
            .column_iter()
            .zip(&phi_x2)
            .map(|(e, p)| p * e.dotc(&psi).norm_sqr())
            .sum();
        points.push(JensenPoint { t, lhs: phi_nonneg(energy), rhs });
    }
    let jensen_holds = points.iter().all(|p| p.lhs >= p.rhs - COMPOSED_TOL);
    let max_rhs = points.iter().map(|p| p.rhs).fold(0.0, f64::max);
    let dominated_by_phi_xi2 = phi_nonneg(xi_k * xi_k) >= max_rhs - COMPOSED_TOL;
    Ok(JensenReport {
        k,
        xi: xi_k,
        applicable: xi_k * xi_k <= 1.0 / E,
        points,
        jensen_holds,
        dominated_by_phi_xi2,
        trace_phi_h2: phi_x2.iter().sum(),
    })
}

/// Σ_k φ(‖HΨ_k‖²) over the initial basis.
pub fn sum_phi_energy(h: &CMatrix, curve: &BasisCurve) -> f64 {
    curve.base().column_iter().map(|psi| phi_nonneg((h * psi).norm_squared())).sum()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::run_measurement;
    use crate::numerics::{c, diagonal, pauli_x, pauli_y, random, CVector};
    use crate::states::DensityMatrix;
    use approx::assert_abs_diff_eq;

    fn qubit_curve() -> BasisCurve {
        BasisCurve::fixed(CMatrix::identity(2, 2), 1.0).unwrap()
    }

    #[test]
    fn epsilon_bound_examples() {
        let p1 = Partition::uniform(1.0, 1).unwrap();
        assert_abs_diff_eq!(epsilon_upper_bound(1.0, 0.0, &p1), 2.0, epsilon = 1e-15);
        let p4 = Partition::uniform(1.0, 4).unwrap();
        assert_abs_diff_eq!(epsilon_upper_bound(1.0, 0.0, &p4), 0.5, epsilon = 1e-15);
        assert_eq!(epsilon_upper_bound(0.0, 0.0, &p4), 0.0);

        let rho = DensityMatrix::new(diagonal(&[0.7, 0.3])).unwrap();
        let r = run_measurement(&rho, &pauli_x(), &qubit_curve(), &p1).unwrap();
        assert!(r.epsilon[0] <= 2.0);
    }

    #[test]
    fn mesh_condition_examples() {
        // ξ=1, η=0, a=2: |Δ|² ≤ ln2/2
        let edge = (2.0_f64.ln() / 2.0).sqrt();
        assert_abs_diff_eq!(edge, 0.588_705, epsilon = 1e-6);
        assert!(mesh_condition(1.0, 0.0, 2.0, edge * (1.0 - 1e-12)).unwrap());
        assert!(!mesh_condition(1.0, 0.0, 2.0, edge * (1.0 + 1e-9)).unwrap());
        for a in [1.5, 2.0, 4.0] {
            assert!(mesh_condition(3.0, 2.0, a, 0.0).unwrap());
        }
        assert!(!mesh_condition(1.0, 1e3, 2.0, 0.01).unwrap());
        assert!(mesh_condition(1.0, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn gamma_lower_bound_examples() {
        let p2 = Partition::uniform(1.0, 2).unwrap();
        let lb = gamma_lower_bound(1.0, 0.0, 2.0, &p2, 0.0);
        assert_abs_diff_eq!(lb, (-1.0_f64).exp(), epsilon = 1e-15);
        assert!(lb <= 0.5_f64.cos().powi(4));

        assert!(gamma_lower_bound(0.0, 0.0, 2.0, &p2, 0.0) <= 1.0);

        let seq: Vec<f64> = [2, 4, 8, 16, 32, 64]
            .iter()
            .map(|&n| gamma_lower_bound(1.0, 0.0, 2.0, &Partition::uniform(1.0, n).unwrap(), 0.0))
            .collect();
        assert!(seq.windows(2).all(|w| w[1] > w[0]));
        assert!(*seq.last().unwrap() < 1.0);
    }

    #[test]
    fn lambda_error_bound_examples() {
        let p4 = Partition::uniform(1.0, 4).unwrap();
        assert_eq!(lambda_error_bound(0.6, 0.0, 0.0, 2.0, &p4, 0.0), 0.0);

        let b = lambda_error_bound(0.7, 1.0, 0.0, 2.0, &p4, 0.0);
        assert_abs_diff_eq!(b, 0.7 * (1.0 - (-0.5_f64).exp()) + 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.775_428, epsilon = 1e-6);
        let rho = DensityMatrix::new(diagonal(&[0.7, 0.3])).unwrap();
        let r = run_measurement(&rho, &pauli_x(), &qubit_curve(), &p4).unwrap();
        assert!((r.lambda_delta[0] - 0.7).abs() <= b);

        assert_abs_diff_eq!(
            lambda_error_bound(0.0, 1.0, 0.5, 2.0, &p4, -0.1),
            epsilon_upper_bound(1.0, 0.5, &p4),
            epsilon = 1e-15
        );
    }

    #[test]
    fn trace_bound_examples() {
        assert_eq!(trace_norm_upper_bound(&[0.4, 0.6], &[1.0, 1.0]), 0.0);
        let c2 = 1.0_f64.cos().powi(2);
        let b = trace_norm_upper_bound(&[0.7, 0.3], &[c2, c2]);
        assert_abs_diff_eq!(b, 2.0 - 2.0 * c2, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 1.416_146_836_547_142_4, epsilon = 1e-14);
        assert!((0.0..=2.0).contains(&trace_norm_upper_bound(&[0.2, 0.8], &[0.0, 0.3])));
    }

    #[test]
    fn report_on_qubit_passes() {
        let rho = DensityMatrix::new(diagonal(&[0.7, 0.3])).unwrap();
        for n in [1, 2, 4, 16, 64] {
            let p = Partition::uniform(1.0, n).unwrap();
            let r = run_measurement(&rho, &pauli_x(), &qubit_curve(), &p).unwrap();
            for a in [1.5, 2.0, 4.0] {
                let rep = bound_report(&r, &qubit_curve(), &pauli_x(), &p, a, 257).unwrap();
                assert!(rep.passed(), "{:?}", rep.violations);
            }
        }
    }

    #[test]
    fn theorem1_checks() {
        let family: Vec<Partition> =
            [1, 4, 16, 64, 256, 1024].iter().map(|&n| Partition::uniform(1.0, n).unwrap()).collect();

        let still = qubit_curve();
        let rep = check_theorem1_conditions(&still, &pauli_x(), 0, &family, 257).unwrap();
        assert!(rep.pass);
        assert!(rep.a3.iter().all(|&(_, v)| v == 0.0));

        let moving = BasisCurve::generated(pauli_y(), CMatrix::identity(2, 2), 1.0).unwrap();
        let rep = check_theorem1_conditions(&moving, &pauli_x(), 0, &family, 257).unwrap();
        assert!(rep.pass, "{rep:?}");
        let (n, v) = *rep.a3.last().unwrap();
        assert_abs_diff_eq!(v, -1.0 / (2.0 * n as f64), epsilon = 1e-7);
    }

    fn jump_curve(points: usize) -> BasisCurve {
        let times: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
        let flipped = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let frames = times
            .iter()
            .map(|&t| if t < 0.5 { CMatrix::identity(2, 2) } else { flipped.clone() })
            .collect();
        BasisCurve::sampled(times, frames).unwrap()
    }

    #[test]
    fn theorem1_flags_discontinuous_curve() {
        let coarse = jump_curve(17);
        let fine = jump_curve(257);
        assert!(eta(&fine, 0).unwrap() > 10.0 * eta(&coarse, 0).unwrap());
        let family: Vec<Partition> =
            [2, 4, 16, 64, 256].iter().map(|&n| Partition::uniform(1.0, n).unwrap()).collect();
        let rep = check_theorem1_conditions(&fine, &pauli_x(), 0, &family, 257).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn sigma_examples() {
        let curve = qubit_curve();
        let sigma = sigma_dominator(&[0.7, 0.3], &[1.0, 1.0], &[0.0, 0.0], &curve, 1.0).unwrap();
        assert!((sigma.clone() - diagonal(&[1.7, 1.3])).norm() < 1e-15);
        let post = diagonal(&[0.416_772, 0.583_228]);
        assert!(domination_slack(&sigma, &post).unwrap() >= 0.0);

        let base = random::unitary(3, &mut random::rng(4));
        let zeno = BasisCurve::fixed(base.clone(), 1.0).unwrap();
        let l = [0.2, 0.5, 0.3];
        let s = sigma_dominator(&l, &[0.0; 3], &[0.0; 3], &zeno, 1.0).unwrap();
        let rho = DensityMatrix::from_spectrum(&l, &base).unwrap();
        assert!((s - rho.matrix()).norm() < 1e-14);

        let xs = [0.3, 0.1, 0.7];
        let es = [0.2, 0.0, 0.4];
        let s = sigma_dominator(&l, &xs, &es, &zeno, 1.0).unwrap();
        let expected = 1.0 + xs.iter().chain(&es).map(|x| x * x).sum::<f64>();
        assert_abs_diff_eq!(s.trace().re, expected, epsilon = 1e-14);
    }

    #[test]
    fn entropy_condition_examples() {
        let l = [0.4, 0.3, 0.2, 0.1];
        let rep = entropy_conditions(&l, &[0.0; 4], &[0.0; 4], 4).unwrap();
        assert_eq!(rep.s_sigma, rep.s_rho);
        assert!(rep.holds());

        let xs = [0.1, 0.05, 0.02, 0.01];
        let rep = entropy_conditions(&l, &xs, &[0.0; 4], 4).unwrap();
        let phi = |x: f64| -x * x.ln();
        let s_rho: f64 = l.iter().map(|&x| phi(x)).sum();
        let sum_xi: f64 = xs.iter().map(|&x| phi(x * x)).sum();
        let s_sigma: f64 = l.iter().zip(&xs).map(|(&a, &x)| phi(a + x * x)).sum();
        assert_abs_diff_eq!(rep.s_rho, s_rho, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.sum_phi_xi2, sum_xi, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.s_sigma, s_sigma, epsilon = 1e-14);
        assert_eq!(rep.sum_phi_eta2, 0.0);
        assert!(rep.holds());
        assert!(rep.tail_decay);
        let tail = rep.tail.as_ref().unwrap();
        assert_eq!(tail.start, 1);
        assert!(tail.holds);

        let big = entropy_conditions(&[0.5, 0.5], &[0.9, 0.9], &[0.0, 0.0], 2).unwrap();
        assert!(big.tail.is_none());
        assert!(big.holds());

        assert!(entropy_conditions(&l, &xs, &[0.0; 4], 5).is_err());
    }

    #[test]
    fn jensen_examples() {
        let h = diagonal(&[0.1, 0.2, 0.3]);
        let eigen = BasisCurve::fixed(CMatrix::identity(3, 3), 1.0).unwrap();
        let rep = jensen_check(&h, &eigen, 1, 5).unwrap();
        assert!(rep.applicable);
        for p in &rep.points {
            assert_abs_diff_eq!(p.lhs, p.rhs, epsilon = 1e-15);
        }

        let s = 1.0 / 3.0_f64.sqrt();
        let v = CVector::from_vec(vec![c(s, 0.0); 3]);
        let base = crate::numerics::gram_schmidt_complete(&[v], 3).unwrap();
        let curve = BasisCurve::fixed(base, 1.0).unwrap();
        let rep = jensen_check(&h, &curve, 0, 3).unwrap();
        let phi = |x: f64| -x * x.ln();
        let lhs = phi((0.01 + 0.04 + 0.09) / 3.0);
        let rhs = (phi(0.01) + phi(0.04) + phi(0.09)) / 3.0;
        assert!(lhs > rhs);
        assert_abs_diff_eq!(rep.points[0].lhs, lhs, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.points[0].rhs, rhs, epsilon = 1e-14);
        assert!(rep.verified());
        assert_abs_diff_eq!(rep.trace_phi_h2, phi(0.01) + phi(0.04) + phi(0.09), epsilon = 1e-14);

        let hot = diagonal(&[2.0, 3.0]);
        let rep = jensen_check(&hot, &qubit_curve(), 0, 3).unwrap();
        assert!(!rep.applicable);
        assert!(rep.verified());
    }

    #[test]
    fn eigenvector_family_energy_sum_is_trace() {
        let mut rng = random::rng(31);
        let base = random::unitary(5, &mut rng);
        let h = spectral_sum(&[0.05, -0.3, 0.2, 0.01, 0.5], &base);
        let curve = BasisCurve::fixed(base, 1.0).unwrap();
        assert_abs_diff_eq!(sum_phi_energy(&h, &curve), trace_phi_h2(&h).unwrap(), epsilon = 1e-9);
    }
}
