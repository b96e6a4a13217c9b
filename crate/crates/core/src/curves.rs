//! Time-parametrized orthonormal bases Ψ_n(t), t ∈ [0, τ], and the
//! regularity constants ξ_k = sup ‖HΨ_k(t)‖ and η_k (Lipschitz constant of
//! t ↦ Ψ_k(t)).

use crate::error::{Error, Result};
use crate::measurement::Partition;
use crate::numerics::{
    ensure_dim, ensure_hermitian, hermitian_eigendecompose, hermitian_operator_norm,
    orthonormality_residual, CMatrix, HermitianEigen, COMPOSED_TOL,
};

pub const DEFAULT_GRID: usize = 257;

/// ‖[A, H]‖ below this counts as commuting.
pub const COMMUTE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum CurveKind {
    /// Ψ_n(t) = Ψ_n.
    Static { base: CMatrix },
    /// Ψ_n(t) = e^{-itA} Ψ_n.
    Generated { generator: CMatrix, spectrum: HermitianEigen, base: CMatrix },
    /// Frames on a grid; evaluation snaps to the nearest grid time.
    Sampled { times: Vec<f64>, frames: Vec<CMatrix> },
}

#[derive(Debug, Clone)]
pub struct BasisCurve {
    dim: usize,
    tau: f64,
    kind: CurveKind,
}

fn check_frame(frame: &CMatrix, dim: usize) -> Result<()> {
    ensure_dim(frame, dim)?;
    let residual = orthonormality_residual(frame);
    if residual > COMPOSED_TOL {
        return Err(Error::NotOrthonormal { residual });
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {tau}")));
    }
    Ok(())
}

impl BasisCurve {
    pub fn fixed(base: CMatrix, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let dim = base.nrows();
        check_frame(&base, dim)?;
        Ok(Self { dim, tau, kind: CurveKind::Static { base } })
    }

    pub fn generated(generator: CMatrix, base: CMatrix, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let dim = base.nrows();
        check_frame(&base, dim)?;
        ensure_dim(&generator, dim)?;
        ensure_hermitian(&generator)?;
        let spectrum = hermitian_eigendecompose(&generator)?;
        Ok(Self { dim, tau, kind: CurveKind::Generated { generator, spectrum, base } })
    }

    /// `times` must ascend strictly from 0; the last time is the horizon.
    pub fn sampled(times: Vec<f64>, frames: Vec<CMatrix>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidArgument("sampled curve needs at least 2 grid times".into()));
        }
        if times.len() != frames.len() {
            return Err(Error::InvalidArgument(format!(
                "{} grid times but {} frames",
                times.len(),
                frames.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidArgument("sampled grid must start at 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("sampled grid must ascend strictly".into()));
        }
        let tau = *times.last().unwrap();
        check_tau(tau)?;
        let dim = frames[0].nrows();
        for frame in &frames {
            check_frame(frame, dim)?;
        }
        Ok(Self { dim, tau, kind: CurveKind::Sampled { times, frames } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    pub fn base(&self) -> &CMatrix {
        match &self.kind {
            CurveKind::Static { base } | CurveKind::Generated { base, .. } => base,
            CurveKind::Sampled { frames, .. } => &frames[0],
        }
    }

    pub fn generator(&self) -> Option<&CMatrix> {
        match &self.kind {
            CurveKind::Generated { generator, .. } => Some(generator),
            _ => None,
        }
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.tau;
        if !(t >= -slack && t <= self.tau + slack) {
            return Err(Error::InvalidArgument(format!("time {t} outside [0, {}]", self.tau)));
        }
        Ok(t.clamp(0.0, self.tau))
    }

    /// The basis Ψ_n(t) as matrix columns.
    pub fn evaluate(&self, t: f64) -> Result<CMatrix> {
        let t = self.check_time(t)?;
        Ok(match &self.kind {
            CurveKind::Static { base } => base.clone(),
            CurveKind::Generated { spectrum, base, .. } => spectrum.exp_minus_i(t) * base,
            CurveKind::Sampled { times, frames } => frames[nearest_index(times, t)].clone(),
        })
    }

    /// Rejects partitions that a sampled curve cannot represent exactly.
    pub fn check_partition(&self, partition: &Partition) -> Result<()> {
        if (partition.tau() - self.tau).abs() > 1e-12 * self.tau {
            return Err(Error::InvalidArgument(format!(
                "partition ends at {} but the curve horizon is {}",
                partition.tau(),
                self.tau
            )));
        }
        if let CurveKind::Sampled { times, .. } = &self.kind {
            for &t in partition.times() {
                let i = nearest_index(times, t);
                if (times[i] - t).abs() > 1e-12 * self.tau {
                    return Err(Error::InvalidArgument(format!(
                        "partition time {t} is not on the sampled grid"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Frames at every partition time.
    pub fn frames_on(&self, partition: &Partition) -> Result<Vec<CMatrix>> {
        self.check_partition(partition)?;
        partition.times().iter().map(|&t| self.evaluate(t)).collect()
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.dim {
            return Err(Error::InvalidArgument(format!("index {k} out of range for dim {}", self.dim)));
        }
        Ok(())
    }
}

fn nearest_index(times: &[f64], t: f64) -> usize {
    match times.binary_search_by(|probe| probe.total_cmp(&t)) {
        Ok(i) => i,
        Err(0) => 0,
        Err(i) if i == times.len() => times.len() - 1,
        Err(i) => {
            if t - times[i - 1] <= times[i] - t {
                i - 1
            } else {
                i
            }
        }
    }
}

/// Operator norm of [A, H], via the Hermitian matrix i[A, H].
pub fn commutator_norm(a: &CMatrix, h: &CMatrix) -> Result<f64> {
    let comm = a * h - h * a;
    let herm = comm * crate::numerics::c(0.0, 1.0);
    hermitian_operator_norm(&herm)
}

fn uniform_grid(tau: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {points}")));
    }
    let m = (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { tau } else { tau * i as f64 / m }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    ClosedForm,
    Grid(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveBounds {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub method: BoundMethod,
}

/// ξ_k = sup_t ‖HΨ_k(t)‖.
///
/// Exact for static curves, for generators commuting with `h`, and for
/// sampled curves (piecewise constant, so the sup is a max over frames).
/// Otherwise a max over `grid` uniformly spaced times, which is a lower
/// bound on the true sup.
pub fn xi(curve: &BasisCurve, h: &CMatrix, k: usize, grid: usize) -> Result<f64> {
    Ok(xi_with_method(curve, h, k, grid)?.0)
}

fn xi_with_method(
    curve: &BasisCurve,
    h: &CMatrix,
    k: usize,
    grid: usize,
) -> Result<(f64, BoundMethod)> {
    ensure_dim(h, curve.dim)?;
    curve.check_index(k)?;
    let norm_at = |frame: &CMatrix| (h * frame.column(k)).norm();
    match &curve.kind {
        CurveKind::Static { base } => Ok((norm_at(base), BoundMethod::ClosedForm)),
        CurveKind::Generated { generator, base, .. }
            if commutator_norm(generator, h)? <= COMMUTE_TOL =>
        {
            Ok((norm_at(base), BoundMethod::ClosedForm))
        }
        CurveKind::Generated { .. } => {
            let mut best = 0.0_f64;
            for t in uniform_grid(curve.tau, grid)? {
                best = best.max(norm_at(&curve.evaluate(t)?));
            }
            Ok((best, BoundMethod::Grid(grid)))
        }
        CurveKind::Sampled { frames, .. } => {
            let best = frames.iter().map(norm_at).fold(0.0_f64, f64::max);
            Ok((best, BoundMethod::ClosedForm))
        }
    }
}

/// max(ξ_k, max_j ‖HΨ_k(t_j)‖ over the given times).
pub fn xi_covering(
    curve: &BasisCurve,
    h: &CMatrix,
    k: usize,
    grid: usize,
    times: &[f64],
) -> Result<f64> {
    let mut best = xi(curve, h, k, grid)?;
    if let CurveKind::Generated { .. } = curve.kind {
        for &t in times {
            best = best.max((h * curve.evaluate(t)?.column(k)).norm());
        }
    }
    Ok(best)
}

/// Lipschitz constant η_k of t ↦ Ψ_k(t).
pub fn eta(curve: &BasisCurve, k: usize) -> Result<f64> {
    curve.check_index(k)?;
    match &curve.kind {
        CurveKind::Static { .. } => Ok(0.0),
        CurveKind::Generated { generator, base, .. } => Ok((generator * base.column(k)).norm()),
        CurveKind::Sampled { times, frames } => {
            let mut best = 0.0_f64;
            for (w, f) in times.windows(2).zip(frames.windows(2)) {
                let jump = (f[1].column(k) - f[0].column(k)).norm();
                best = best.max(jump / (w[1] - w[0]));
            }
            Ok(best)
        }
    }
}

pub fn curve_bounds(curve: &BasisCurve, h: &CMatrix, grid: usize) -> Result<CurveBounds> {
    let mut xis = Vec::with_capacity(curve.dim);
    let mut etas = Vec::with_capacity(curve.dim);
    let mut method = BoundMethod::ClosedForm;
    for k in 0..curve.dim {
        let (x, m) = xi_with_method(curve, h, k, grid)?;
        if m != BoundMethod::ClosedForm {
            method = m;
        }
        xis.push(x);
        etas.push(eta(curve, k)?);
    }
    Ok(CurveBounds { xi: xis, eta: etas, method })
}

/// Σ_j Re<Ψ_k(t_j) − Ψ_k(t_{j−1}), Ψ_k(t_{j−1})>.
pub fn a3_sum(curve: &BasisCurve, partition: &Partition, k: usize) -> Result<f64> {
    curve.check_index(k)?;
    let frames = curve.frames_on(partition)?;
    Ok(frames
        .windows(2)
        .map(|f| {
            let prev = f[0].column(k);
            let diff = f[1].column(k) - prev;
            prev.dotc(&diff).re
        })
        .sum())
}

/// −½ Σ_j ‖Ψ_k(t_j) − Ψ_k(t_{j−1})‖², equal to [`a3_sum`] for unit vectors.
pub fn a3_sum_chordal(curve: &BasisCurve, partition: &Partition, k: usize) -> Result<f64> {
    curve.check_index(k)?;
    let frames = curve.frames_on(partition)?;
    Ok(-0.5
        * frames
            .windows(2)
            .map(|f| (f[1].column(k) - f[0].column(k)).norm_squared())
            .sum::<f64>())
}
