use thiserror::Error;

/// Errors raised by the measurement laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (defect {defect:.3e} > tolerance {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("vector is not normalised (norm {0})")]
    NotNormalized(f64),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid reading scale: {0}")]
    InvalidScale(String),

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent scheme: reconstruction residual {0:.3e}")]
    Reconstruction(f64),

    #[error("route disagreement in {what}: {residual:.3e}")]
    RouteMismatch { what: String, residual: f64 },

    #[error("truncation too small: {0}")]
    Truncation(String),
}

pub type Result<T> = std::result::Result<T, QmError>;
