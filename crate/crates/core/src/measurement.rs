//! The measurement protocol: evolve by `e^{-iΔ_j H}`, then dephase in the
//! curve basis at `t_j`, for every step of a partition of `[0, τ]`.
//!
//! The posterior state is computed twice. [`evolve_by_channels`] composes
//! the channels on the full density matrix. [`transfer_lambda`] propagates
//! only the populations through the doubly stochastic step matrices
//! `M_ab = |<Ψ_a(t_j), e^{-iΔ_j H} Ψ_b(t_{j-1})>|²`. [`run_measurement`]
//! runs both and fails if they disagree.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;

use crate::channels::{apply_projection_channel, apply_unitary_channel, rank1_family};
use crate::curves::BasisCurve;
use crate::error::{Error, Result};
use crate::numerics::{
    self, ensure_dim, hermitian_eigendecompose, CMatrix, HermitianEigen, COMPOSED_TOL,
};
use crate::states::DensityMatrix;

/// 0 = t_0 < t_1 < … < t_N = τ.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidArgument("a partition needs at least one step".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidArgument(format!("partition starts at {}", times[0])));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("partition times must ascend strictly".into()));
        }
        Ok(Self { times })
    }

    /// Δ_k = τ/N.
    pub fn uniform(tau: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        let nf = n as f64;
        let times = (0..=n).map(|k| if k == n { tau } else { tau * k as f64 / nf }).collect();
        Self::new(times)
    }

    /// N − 1 interior points drawn uniformly from a seeded generator, kept at
    /// least τ·1e-6 apart from each other and from the endpoints.
    pub fn random(tau: f64, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        let gap = tau * 1e-6;
        let wanted = n - 1;
        if (n as f64) * gap >= tau {
            return Err(Error::InvalidArgument(format!(
                "cannot place {wanted} interior points with gap {gap:e}"
            )));
        }
        let mut rng = numerics::random::rng(seed);
        let mut interior: Vec<f64> = Vec::with_capacity(wanted);
        for _ in 0..64 {
            if interior.len() == wanted {
                break;
            }
            let missing = wanted - interior.len();
            interior.extend((0..missing).map(|_| rng.random_range(0.0..tau)));
            interior.sort_by(f64::total_cmp);
            let mut kept: Vec<f64> = Vec::with_capacity(interior.len());
            for t in interior.drain(..) {
                let clear_left = kept.last().map_or(t >= gap, |&x| t - x >= gap);
                if clear_left && tau - t >= gap && kept.len() < wanted {
                    kept.push(t);
                }
            }
            interior = kept;
        }
        if interior.len() < wanted {
            return Err(Error::InvalidArgument(format!(
                "could not place {wanted} interior points with gap {gap:e}"
            )));
        }
        let mut times = Vec::with_capacity(n + 1);
        times.push(0.0);
        times.extend(interior);
        times.push(tau);
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of steps N.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn tau(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn deltas(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }

    /// |Δ| = max Δ_k.
    pub fn mesh(&self) -> f64 {
        self.deltas().fold(0.0, f64::max)
    }

    /// Σ Δ_k².
    pub fn sumsq(&self) -> f64 {
        self.deltas().map(|d| d * d).sum()
    }
}

/// e^{-iΔH} for each distinct step length, from one eigendecomposition of H.
struct Propagators {
    spectrum: HermitianEigen,
    cache: HashMap<u64, CMatrix>,
}

impl Propagators {
    fn new(h: &CMatrix) -> Result<Self> {
        Ok(Self { spectrum: hermitian_eigendecompose(h)?, cache: HashMap::new() })
    }

    fn step(&mut self, delta: f64) -> &CMatrix {
        let spectrum = &self.spectrum;
        self.cache.entry(delta.to_bits()).or_insert_with(|| spectrum.exp_minus_i(delta))
    }
}

fn check_inputs(rho: &DensityMatrix, h: &CMatrix, curve: &BasisCurve) -> Result<()> {
    ensure_dim(h, rho.dim())?;
    numerics::ensure_hermitian(h)?;
    if curve.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: curve.dim() });
    }
    Ok(())
}

/// Populations of ρ in the curve's initial basis. ρ must be diagonal there.
pub fn initial_lambdas(rho: &DensityMatrix, curve: &BasisCurve) -> Result<Vec<f64>> {
    let off = rho.off_diagonal_residual(curve.base());
    if off > COMPOSED_TOL {
        return Err(Error::InvalidArgument(format!(
            "state is not diagonal in the curve's initial basis (off-diagonal {off:.3e})"
        )));
    }
    Ok(rho.populations(curve.base()))
}

/// ρ_Δ(τ) by composing unitary and projection channels.
pub fn evolve_by_channels(
    rho: &DensityMatrix,
    h: &CMatrix,
    curve: &BasisCurve,
    partition: &Partition,
) -> Result<DensityMatrix> {
    check_inputs(rho, h, curve)?;
    initial_lambdas(rho, curve)?;
    curve.check_partition(partition)?;
    let mut props = Propagators::new(h)?;
    let mut state = rho.clone();
    for (w, delta) in partition.times().windows(2).zip(partition.deltas()) {
        state = apply_unitary_channel(props.step(delta), &state)?;
        let family = rank1_family(&curve.evaluate(w[1])?)?;
        state = apply_projection_channel(&family, &state)?;
    }
    Ok(state)
}

fn transfer_from_frames(prev: &CMatrix, u: &CMatrix, next: &CMatrix) -> DMatrix<f64> {
    let amp = next.adjoint() * u * prev;
    amp.map(|z| z.norm_sqr())
}

/// M_ab = |<Ψ_a(t_next), e^{-i(t_next − t_prev)H} Ψ_b(t_prev)>|².
pub fn step_transfer_matrix(
    curve: &BasisCurve,
    h: &CMatrix,
    t_prev: f64,
    t_next: f64,
) -> Result<DMatrix<f64>> {
    ensure_dim(h, curve.dim())?;
    if !(t_next > t_prev) {
        return Err(Error::InvalidArgument(format!("step {t_prev} -> {t_next} is not forward")));
    }
    let u = numerics::unitary_exponential(h, t_next - t_prev)?;
    Ok(transfer_from_frames(&curve.evaluate(t_prev)?, &u, &curve.evaluate(t_next)?))
}

/// Largest deviation of a row or column sum from 1.
pub fn stochastic_residual(m: &DMatrix<f64>) -> f64 {
    let rows = m.row_iter().map(|r| (r.sum() - 1.0).abs());
    let cols = m.column_iter().map(|c| (c.sum() - 1.0).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

/// All step matrices of a partition, in time order.
pub fn transfer_matrices(
    curve: &BasisCurve,
    h: &CMatrix,
    partition: &Partition,
) -> Result<Vec<DMatrix<f64>>> {
    ensure_dim(h, curve.dim())?;
    let frames = curve.frames_on(partition)?;
    let mut props = Propagators::new(h)?;
    Ok(frames
        .windows(2)
        .zip(partition.deltas())
        .map(|(f, delta)| transfer_from_frames(&f[0], props.step(delta), &f[1]))
        .collect())
}

/// M^{(N)} ⋯ M^{(1)} λ.
pub fn transfer_lambda(
    lambdas: &[f64],
    curve: &BasisCurve,
    h: &CMatrix,
    partition: &Partition,
) -> Result<Vec<f64>> {
    check_probability(lambdas, curve.dim())?;
    let mats = transfer_matrices(curve, h, partition)?;
    Ok(propagate(lambdas, &mats))
}

fn propagate(lambdas: &[f64], mats: &[DMatrix<f64>]) -> Vec<f64> {
    let mut v = nalgebra::DVector::from_column_slice(lambdas);
    for m in mats {
        v = m * v;
    }
    v.iter().copied().collect()
}

fn check_probability(lambdas: &[f64], dim: usize) -> Result<()> {
    if lambdas.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: lambdas.len() });
    }
    let total: f64 = lambdas.iter().sum();
    if lambdas.iter().any(|&l| !(l >= 0.0)) || (total - 1.0).abs() > COMPOSED_TOL {
        return Err(Error::InvalidArgument(format!("weights {lambdas:?} are not a probability vector")));
    }
    Ok(())
}

/// γ_{Δ,k} = Π_j M^{(j)}_{kk}.
pub fn gamma_survival(
    curve: &BasisCurve,
    h: &CMatrix,
    partition: &Partition,
    k: usize,
) -> Result<f64> {
    if k >= curve.dim() {
        return Err(Error::InvalidArgument(format!("index {k} out of range")));
    }
    Ok(transfer_matrices(curve, h, partition)?.iter().map(|m| m[(k, k)]).product())
}

/// ρ(τ) = Σ λ_n |Ψ_n(τ)><Ψ_n(τ)|.
pub fn target_state(curve: &BasisCurve, lambdas: &[f64], tau: f64) -> Result<DensityMatrix> {
    DensityMatrix::from_spectrum(lambdas, &curve.evaluate(tau)?)
}

/// Leakage ε_{Δ,k} by explicit enumeration of every index path
/// (k_0, …, k_{N−1}) that leaves k at least once. Exponential in N; meant
/// as a reference for small cases. Amplitudes are recomputed per step
/// without the propagator cache.
pub fn leak_by_path_enumeration(
    lambdas: &[f64],
    curve: &BasisCurve,
    h: &CMatrix,
    partition: &Partition,
    k: usize,
) -> Result<f64> {
    let d = curve.dim();
    let n = partition.steps();
    let paths = (d as f64).powi(n as i32);
    if paths > 1e7 {
        return Err(Error::InvalidArgument(format!("{paths} paths is too many to enumerate")));
    }
    let times = partition.times();
    let mut probs: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for j in 1..=n {
        let u = numerics::unitary_exponential(h, times[j] - times[j - 1])?;
        let prev = curve.evaluate(times[j - 1])?;
        let next = curve.evaluate(times[j])?;
        probs.push(DMatrix::from_fn(d, d, |a, b| {
            let psi_b = &u * prev.column(b);
            next.column(a).dotc(&psi_b).norm_sqr()
        }));
    }
    // path[i] = k_i for i < N, and k_N = k
    let mut path = vec![0usize; n];
    let mut total = 0.0;
    loop {
        if path.iter().any(|&x| x != k) {
            let mut weight = lambdas[path[0]];
            for j in 1..=n {
                let to = if j == n { k } else { path[j] };
                weight *= probs[j - 1][(to, path[j - 1])];
            }
            total += weight;
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(total);
            }
            path[pos] += 1;
            if path[pos] < d {
                break;
            }
            path[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// max_k |diag(ρ_Δ(τ))_k − λ_{Δ,k}| between the two routes.
    pub dual_route_gap: f64,
    /// Off-diagonal modulus of ρ_Δ(τ) in {Ψ_k(τ)}.
    pub off_diagonal: f64,
    /// Worst row/column-sum deviation over all step matrices.
    pub stochastic_residual: f64,
    /// |‖ρ_Δ − ρ(τ)‖₁ − Σ_k |λ_{Δ,k} − λ_k||.
    pub proof_identity_gap: f64,
    /// Number of ε values in [−1e-10, 0) clamped to zero.
    pub clamped_epsilon: usize,
}

#[derive(Debug, Clone)]
pub struct MeasurementResult {
    /// ρ_Δ(τ)
    pub rho_final: DensityMatrix,
    /// ρ(τ)
    pub target: DensityMatrix,
    /// λ_k, populations of the initial state in the curve basis.
    pub lambdas: Vec<f64>,
    /// λ_{Δ,k}
    pub lambda_delta: Vec<f64>,
    /// γ_{Δ,k}
    pub gamma: Vec<f64>,
    /// ε_{Δ,k} = λ_{Δ,k} − λ_k γ_{Δ,k}
    pub epsilon: Vec<f64>,
    /// ‖ρ_Δ(τ) − ρ(τ)‖₁
    pub trace_distance_to_target: f64,
    /// 2 − 2 Σ_k λ_k γ_{Δ,k}
    pub trace_bound: f64,
    pub diagnostics: Diagnostics,
}

impl MeasurementResult {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }
}

pub fn epsilon_leak(result: &MeasurementResult, k: usize) -> f64 {
    result.epsilon[k]
}

/// Runs both routes and checks every structural identity between them.
/// Any violation is returned as [`Error::Invariant`].
pub fn run_measurement(
    rho: &DensityMatrix,
    h: &CMatrix,
    curve: &BasisCurve,
    partition: &Partition,
) -> Result<MeasurementResult> {
    check_inputs(rho, h, curve)?;
    let lambdas = initial_lambdas(rho, curve)?;
    let rho_final = evolve_by_channels(rho, h, curve, partition)?;

    let mats = transfer_matrices(curve, h, partition)?;
    let stochastic = mats.iter().map(stochastic_residual).fold(0.0, f64::max);
    if stochastic > COMPOSED_TOL {
        return Err(Error::invariant("double stochasticity", format!("residual {stochastic:.3e}")));
    }
    let lambda_delta = propagate(&lambdas, &mats);
    let d = lambdas.len();
    let gamma: Vec<f64> =
        (0..d).map(|k| mats.iter().map(|m| m[(k, k)]).product()).collect();
    if let Some(g) = gamma.iter().find(|&&g| !(-1e-12..=1.0 + 1e-12).contains(&g)) {
        return Err(Error::invariant("survival factor range", format!("gamma = {g}")));
    }

    let total: f64 = lambda_delta.iter().sum();
    if (total - 1.0).abs() > COMPOSED_TOL {
        return Err(Error::invariant("coefficient normalization", format!("sum = {total}")));
    }

    let final_basis = curve.evaluate(partition.tau())?;
    let diag = rho_final.populations(&final_basis);
    let dual_route_gap =
        diag.iter().zip(&lambda_delta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if dual_route_gap > COMPOSED_TOL {
        return Err(Error::invariant(
            "channel route equals transfer route",
            format!("max gap {dual_route_gap:.3e}"),
        ));
    }
    let off_diagonal = rho_final.off_diagonal_residual(&final_basis);
    if off_diagonal > COMPOSED_TOL {
        return Err(Error::invariant(
            "posterior diagonal in final basis",
            format!("off-diagonal {off_diagonal:.3e}"),
        ));
    }

    let mut clamped_epsilon = 0;
    let mut epsilon = Vec::with_capacity(d);
    for k in 0..d {
        let e = lambda_delta[k] - lambdas[k] * gamma[k];
        if e < -1e-10 {
            return Err(Error::invariant("leakage nonnegativity", format!("epsilon_{k} = {e:.3e}")));
        }
        if e < 0.0 {
            clamped_epsilon += 1;
        }
        epsilon.push(e.max(0.0));
    }

    let target = target_state(curve, &lambdas, partition.tau())?;
    let trace_distance_to_target =
        numerics::trace_norm(&(rho_final.matrix() - target.matrix()))?;
    let coefficient_distance: f64 =
        lambda_delta.iter().zip(&lambdas).map(|(a, b)| (a - b).abs()).sum();
    let proof_identity_gap = (trace_distance_to_target - coefficient_distance).abs();
    if proof_identity_gap > 1e-8 {
        return Err(Error::invariant(
            "trace distance equals coefficient distance",
            format!("{trace_distance_to_target} vs {coefficient_distance}"),
        ));
    }
    let trace_bound =
        2.0 - 2.0 * lambdas.iter().zip(&gamma).map(|(l, g)| l * g).sum::<f64>();
    if trace_distance_to_target > trace_bound + COMPOSED_TOL {
        return Err(Error::invariant(
            "trace distance below 2 - 2 sum lambda gamma",
            format!("{trace_distance_to_target} > {trace_bound}"),
        ));
    }

    Ok(MeasurementResult {
        rho_final,
        target,
        lambdas,
        lambda_delta,
        gamma,
        epsilon,
        trace_distance_to_target,
        trace_bound,
        diagnostics: Diagnostics {
            dual_route_gap,
            off_diagonal,
            stochastic_residual: stochastic,
            proof_identity_gap,
            clamped_epsilon,
        },
    })
}
