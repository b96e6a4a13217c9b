//! Unitary and projection channels.

use crate::error::{Error, Result};
use crate::numerics::{ensure_dim, orthonormality_residual, unitarity_residual, CMatrix, COMPOSED_TOL};
use crate::states::DensityMatrix;

/// Worst-case residuals of a projector family, in Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FamilyReport {
    /// max_n ‖P_n − P_n*‖
    pub hermiticity: f64,
    /// max_n ‖P_n² − P_n‖
    pub idempotence: f64,
    /// max_{m≠n} ‖P_m P_n‖
    pub orthogonality: f64,
    /// ‖Σ P_n − I‖
    pub completeness: f64,
}

impl FamilyReport {
    pub fn worst(&self) -> f64 {
        self.hermiticity.max(self.idempotence).max(self.orthogonality).max(self.completeness)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.worst() <= tol
    }

    /// Names every residual above `tol`.
    pub fn violations(&self, tol: f64) -> Vec<String> {
        [
            ("hermiticity", self.hermiticity),
            ("idempotence", self.idempotence),
            ("orthogonality", self.orthogonality),
            ("completeness", self.completeness),
        ]
        .into_iter()
        .filter(|(_, r)| *r > tol)
        .map(|(name, r)| format!("{name} residual {r:.3e}"))
        .collect()
    }
}

pub fn validate_projection_family(projectors: &[CMatrix]) -> FamilyReport {
    let Some(first) = projectors.first() else {
        return FamilyReport { completeness: f64::INFINITY, ..Default::default() };
    };
    let d = first.nrows();
    if projectors.iter().any(|p| p.nrows() != d || p.ncols() != d) {
        return FamilyReport { completeness: f64::INFINITY, ..Default::default() };
    }
    let mut report = FamilyReport::default();
    let mut sum = CMatrix::zeros(d, d);
    for (m, p) in projectors.iter().enumerate() {
        report.hermiticity = report.hermiticity.max((p - p.adjoint()).norm());
        report.idempotence = report.idempotence.max((p * p - p).norm());
        for q in &projectors[m + 1..] {
            report.orthogonality = report.orthogonality.max((p * q).norm());
        }
        sum += p;
    }
    report.completeness = (sum - CMatrix::identity(d, d)).norm();
    report
}

/// Orthogonal projectors summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionFamily {
    projectors: Vec<CMatrix>,
    dim: usize,
    // generating CONS for rank-1 families
    basis: Option<CMatrix>,
}

impl ProjectionFamily {
    pub fn new(projectors: Vec<CMatrix>) -> Result<Self> {
        let report = validate_projection_family(&projectors);
        if !report.is_valid(COMPOSED_TOL) {
            return Err(Error::InvalidFamily { reason: report.violations(COMPOSED_TOL).join(", ") });
        }
        let dim = projectors[0].nrows();
        Ok(Self { projectors, dim, basis: None })
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Option<&CMatrix> {
        self.basis.as_ref()
    }
}

/// {|Ψ_n><Ψ_n|} for the columns Ψ_n of an orthonormal `basis`.
pub fn rank1_family(basis: &CMatrix) -> Result<ProjectionFamily> {
    let d = basis.nrows();
    let residual = orthonormality_residual(basis);
    if residual > COMPOSED_TOL {
        return Err(Error::NotOrthonormal { residual });
    }
    let projectors: Vec<CMatrix> =
        basis.column_iter().map(|col| col * col.adjoint()).collect();
    if basis.ncols() != d {
        let report = validate_projection_family(&projectors);
        return Err(Error::InvalidFamily { reason: report.violations(COMPOSED_TOL).join(", ") });
    }
    Ok(ProjectionFamily { projectors, dim: d, basis: Some(basis.clone()) })
}

/// ρ ↦ UρU*.
pub fn apply_unitary_channel(u: &CMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    ensure_dim(u, rho.dim())?;
    let residual = unitarity_residual(u);
    if residual > COMPOSED_TOL {
        return Err(Error::NotUnitary { residual });
    }
    DensityMatrix::from_channel_output(u * rho.matrix() * u.adjoint())
}

/// ρ ↦ Σ P_n ρ P_n.
pub fn apply_projection_channel(
    family: &ProjectionFamily,
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    if family.dim != rho.dim() {
        return Err(Error::DimensionMismatch { expected: family.dim, found: rho.dim() });
    }
    let out = match &family.basis {
        // B diag(B*ρB) B*
        Some(b) => {
            let pops = rho.populations(b);
            crate::states::spectral_sum(&pops, b)
        }
        None => family
            .projectors
            .iter()
            .fold(CMatrix::zeros(family.dim, family.dim), |acc, p| acc + p * rho.matrix() * p),
    };
    DensityMatrix::from_channel_output(out)
}
