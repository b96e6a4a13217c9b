use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("eigensolver did not converge")]
    EigenNoConvergence,

    #[error("vectors are linearly dependent at index {index} (residual norm {residual:.3e})")]
    RankDeficient { index: usize, residual: f64 },

    #[error("basis is not orthonormal (residual {residual:.3e})")]
    NotOrthonormal { residual: f64 },

    #[error("not a density matrix: {reason}")]
    NotState { reason: String },

    #[error("invalid projection family: {reason}")]
    InvalidFamily { reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invariant `{name}` violated: {detail}")]
    Invariant { name: &'static str, detail: String },
}

impl Error {
    pub(crate) fn invariant(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant { name, detail: detail.into() }
    }
}
