//! Dense complex linear algebra used by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`; a complete orthonormal system
//! is stored as a matrix whose columns are the basis vectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Structural tolerance: hermiticity, orthonormality, unit trace.
pub const STRUCT_TOL: f64 = 1e-10;
/// Tolerance for checks on composed computations.
pub const COMPOSED_TOL: f64 = 1e-9;

const EIGEN_MAX_ITER: usize = 10_000;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

pub fn diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(m.nrows())
}

pub fn ensure_dim(m: &CMatrix, dim: usize) -> Result<()> {
    let d = ensure_square(m)?;
    if d != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: d });
    }
    Ok(())
}

/// max |M - M*| over entries.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn hermitian_tolerance(m: &CMatrix) -> f64 {
    STRUCT_TOL * max_abs(m).max(1.0)
}

pub fn ensure_hermitian(m: &CMatrix) -> Result<()> {
    ensure_square(m)?;
    let residual = hermiticity_residual(m);
    if residual > hermitian_tolerance(m) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

/// max |B*B - I| over entries.
pub fn orthonormality_residual(basis: &CMatrix) -> f64 {
    let gram = basis.adjoint() * basis;
    max_abs(&(gram - CMatrix::identity(basis.ncols(), basis.ncols())))
}

pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u * u.adjoint() - CMatrix::identity(n, n)))
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending. Each eigenvector is scaled so that its
/// largest-modulus entry (first one on ties) is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// V f(Λ) V*.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= fv;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// e^{-itM} for the decomposed matrix M.
    pub fn exp_minus_i(&self, t: f64) -> CMatrix {
        self.apply_fn(|x| Complex64::from_polar(1.0, -t * x))
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_fn(|x| c(x, 0.0))
    }

    /// Largest absolute eigenvalue, i.e. the operator norm.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

pub fn hermitian_eigendecompose(m: &CMatrix) -> Result<HermitianEigen> {
    ensure_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNoConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        let mut pivot = 0;
        let mut best = -1.0;
        for (r, z) in col.iter().enumerate() {
            if z.norm() > best {
                best = z.norm();
                pivot = r;
            }
        }
        let phase = col[pivot].conj() / col[pivot].norm();
        let norm = col.norm();
        for r in 0..n {
            vectors[(r, j)] = col[r] * phase / norm;
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// e^{-itH} via the spectral decomposition of `h`.
pub fn unitary_exponential(h: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(hermitian_eigendecompose(h)?.exp_minus_i(t))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(t: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigendecompose(t)?.values.iter().map(|v| v.abs()).sum())
}

/// Operator norm of a Hermitian matrix.
pub fn hermitian_operator_norm(t: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigendecompose(t)?.spectral_radius())
}

/// Orthonormalizes `partial` in order, then completes it to a basis of
/// dimension `d` with standard basis vectors taken in index order.
///
/// Returns the basis as matrix columns.
pub fn gram_schmidt_complete(partial: &[CVector], d: usize) -> Result<CMatrix> {
    if partial.len() > d {
        return Err(Error::InvalidArgument(format!(
            "{} vectors cannot be orthonormal in dimension {d}",
            partial.len()
        )));
    }
    let mut basis: Vec<CVector> = Vec::with_capacity(d);
    for (index, v) in partial.iter().enumerate() {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: v.len() });
        }
        let scale = v.norm();
        let residual = project_out(v, &basis);
        let rn = residual.norm();
        if scale == 0.0 || rn <= STRUCT_TOL * scale.max(1.0) {
            return Err(Error::RankDeficient { index, residual: rn });
        }
        basis.push(residual.unscale(rn));
    }

    // Some standard vector always has residual^2 >= 1/d while the span is
    // incomplete, so this threshold cannot stall.
    let threshold = 0.5 / (d as f64).sqrt();
    for i in 0..d {
        if basis.len() == d {
            break;
        }
        let mut e = CVector::zeros(d);
        e[i] = c(1.0, 0.0);
        let residual = project_out(&e, &basis);
        let rn = residual.norm();
        if rn > threshold {
            basis.push(residual.unscale(rn));
        }
    }
    debug_assert_eq!(basis.len(), d);
    Ok(CMatrix::from_columns(&basis))
}

// Two passes of classical Gram-Schmidt.
fn project_out(v: &CVector, basis: &[CVector]) -> CVector {
    let mut r = v.clone();
    for _ in 0..2 {
        for q in basis {
            let coeff = q.dotc(&r);
            r -= q * coeff;
        }
    }
    r
}

/// Seeded fixtures. The generator is ChaCha8 seeded through `seed_from_u64`.
pub mod random {
    use super::*;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn normal_complex<R: Rng>(rng: &mut R) -> Complex64 {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    pub fn ginibre<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
        CMatrix::from_fn(d, d, |_, _| normal_complex(rng))
    }

    /// (G + G*)/2 with standard-normal real and imaginary parts.
    pub fn hermitian<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
        let g = ginibre(d, rng);
        (&g + g.adjoint()).scale(0.5)
    }

    pub fn unit_vector<R: Rng>(d: usize, rng: &mut R) -> CVector {
        let v = CVector::from_fn(d, |_, _| normal_complex(rng));
        let n = v.norm();
        v.unscale(n)
    }

    /// Orthonormalized Gaussian columns.
    pub fn unitary<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
        let cols: Vec<CVector> = (0..d).map(|_| unit_vector(d, rng)).collect();
        gram_schmidt_complete(&cols, d).expect("Gaussian vectors are independent almost surely")
    }

    /// Strictly positive probability vector.
    pub fn spectrum<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
        let raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }

    /// G G* / Tr(G G*).
    pub fn density<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
        let g = ginibre(d, rng);
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        m.unscale(tr)
    }
}
