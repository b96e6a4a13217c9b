//! Mixed states, their eigen-expansions, and von Neumann entropy.

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::numerics::{
    self, c, ensure_square, hermitian_eigendecompose, max_abs, orthonormality_residual, CMatrix,
    CVector, COMPOSED_TOL, STRUCT_TOL,
};

/// Hermitian, positive-semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity (eigenvalues >= -1e-10).
    pub fn new(matrix: CMatrix) -> Result<Self> {
        ensure_square(&matrix)?;
        let residual = numerics::hermiticity_residual(&matrix);
        if residual > STRUCT_TOL {
            return Err(Error::NotState { reason: format!("hermiticity residual {residual:.3e}") });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STRUCT_TOL || tr.im.abs() > STRUCT_TOL {
            return Err(Error::NotState { reason: format!("trace {tr}") });
        }
        let eig = hermitian_eigendecompose(&matrix)?;
        if let Some(&min) = eig.values.first() {
            if min < -STRUCT_TOL {
                return Err(Error::NotState { reason: format!("negative eigenvalue {min:.3e}") });
            }
        }
        Ok(Self { matrix: symmetrize(&matrix) })
    }

    /// Σ λ_n |b_n><b_n| for the columns b_n of `basis`.
    pub fn from_spectrum(lambdas: &[f64], basis: &CMatrix) -> Result<Self> {
        let d = ensure_square(basis)?;
        if lambdas.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: lambdas.len() });
        }
        let residual = orthonormality_residual(basis);
        if residual > COMPOSED_TOL {
            return Err(Error::NotOrthonormal { residual });
        }
        if let Some(bad) = lambdas.iter().find(|&&l| l < 0.0 || !l.is_finite()) {
            return Err(Error::NotState { reason: format!("eigenvalue {bad} is not a probability") });
        }
        let total: f64 = lambdas.iter().sum();
        if (total - 1.0).abs() > COMPOSED_TOL {
            return Err(Error::NotState { reason: format!("eigenvalues sum to {total}") });
        }
        Ok(Self { matrix: spectral_sum(lambdas, basis) })
    }

    /// Accepts the output of a trace-preserving, positivity-preserving map.
    /// Hermiticity and trace are rechecked; positivity is inherited.
    pub(crate) fn from_channel_output(matrix: CMatrix) -> Result<Self> {
        let residual = numerics::hermiticity_residual(&matrix);
        if residual > COMPOSED_TOL {
            return Err(Error::invariant("channel output hermiticity", format!("{residual:.3e}")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > COMPOSED_TOL {
            return Err(Error::invariant("channel trace preservation", format!("trace {tr}")));
        }
        Ok(Self { matrix: symmetrize(&matrix) })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: CMatrix::identity(d, d).unscale(d as f64) }
    }

    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if (n - 1.0).abs() > STRUCT_TOL {
            return Err(Error::NotState { reason: format!("vector norm {n}") });
        }
        Ok(Self { matrix: psi * psi.adjoint() })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Diagonal of B* ρ B, the populations in the basis given by the columns of B.
    pub fn populations(&self, basis: &CMatrix) -> Vec<f64> {
        let m = basis.adjoint() * &self.matrix * basis;
        (0..m.nrows()).map(|i| m[(i, i)].re).collect()
    }

    /// Largest off-diagonal modulus of B* ρ B.
    pub fn off_diagonal_residual(&self, basis: &CMatrix) -> f64 {
        let m = basis.adjoint() * &self.matrix * basis;
        let mut worst = 0.0_f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    worst = worst.max(m[(i, j)].norm());
                }
            }
        }
        worst
    }
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Σ_j w_j |b_j><b_j| over the columns of `basis`.
pub fn spectral_sum(weights: &[f64], basis: &CMatrix) -> CMatrix {
    let mut scaled = basis.clone();
    for (j, &w) in weights.iter().enumerate() {
        for z in scaled.column_mut(j).iter_mut() {
            *z *= c(w, 0.0);
        }
    }
    scaled * basis.adjoint()
}

/// ρ = Σ λ_n |Ψ_n><Ψ_n| with Ψ_n the columns of `basis`. Zero weights are
/// kept so that the basis is complete; no ordering is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct SchattenDecomposition {
    pub lambdas: Vec<f64>,
    pub basis: CMatrix,
}

impl SchattenDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        spectral_sum(&self.lambdas, &self.basis)
    }
}

/// Eigenvalues in [-1e-10, 0) are clamped to zero and the rest renormalized.
pub fn schatten_decompose(rho: &DensityMatrix) -> Result<SchattenDecomposition> {
    let eig = hermitian_eigendecompose(rho.matrix())?;
    if let Some(bad) = eig.values.iter().find(|&&v| v < -STRUCT_TOL) {
        return Err(Error::NotState { reason: format!("negative eigenvalue {bad:.3e}") });
    }
    let clamped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let lambdas = clamped.into_iter().map(|v| v / total).collect();
    Ok(SchattenDecomposition { lambdas, basis: eig.vectors })
}

/// φ(x) = -x ln x with φ(0) = 0.
pub fn phi(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("phi is defined on [0, inf), got {x}")));
    }
    Ok(phi_nonneg(x))
}

pub(crate) fn phi_nonneg(x: f64) -> f64 {
    debug_assert!(x >= 0.0, "phi argument {x}");
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// S(ρ) = Σ φ(λ_k) in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(schatten_decompose(rho)?.lambdas.iter().map(|&l| phi_nonneg(l)).sum())
}

/// Shannon-type entropy of a probability vector.
pub fn entropy_of_spectrum(lambdas: &[f64]) -> f64 {
    lambdas.iter().map(|&l| phi_nonneg(l.max(0.0))).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FannesBound {
    pub trace_distance: f64,
    /// T <= 1/e
    pub applicable: bool,
    /// T ln d + φ(T)
    pub bound: f64,
}

impl FannesBound {
    /// Whether |ΔS| respects the bound, or the bound does not apply.
    pub fn admits(&self, entropy_gap: f64, tol: f64) -> bool {
        !self.applicable || entropy_gap <= self.bound + tol
    }
}

pub fn fannes_bound(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<FannesBound> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch { expected: rho1.dim(), found: rho2.dim() });
    }
    let t = numerics::trace_norm(&(rho1.matrix() - rho2.matrix()))?;
    let d = rho1.dim() as f64;
    Ok(FannesBound {
        trace_distance: t,
        applicable: t <= 1.0 / E,
        bound: t * d.ln() + phi_nonneg(t),
    })
}

/// max |ρ - ρ'| entrywise, for tests and diagnostics.
pub fn max_entry_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    max_abs(&(a.matrix() - b.matrix()))
}
