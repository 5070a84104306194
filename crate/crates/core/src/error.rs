use thiserror::Error;

/// Errors raised by instance validation and trajectory construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("eigenvalue {index} is negative ({value})")]
    NegativeEigenvalue { index: usize, value: f64 },

    #[error("eigenvalues sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("dimension mismatch: {field} has length {found}, expected {expected}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("tolerance {name} must be positive (got {value})")]
    NonPositiveTolerance { name: &'static str, value: f64 },

    #[error("initial populations are not majorized by the eigenvalues")]
    NotMajorized,

    #[error("non-finite value in {field}")]
    NonFinite { field: &'static str },

    #[error("dimension {dim} exceeds the enumeration cap {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("dimension {dim} exceeds the configured cap {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("population vector is not a vertex of the population polytope")]
    NotAVertex,

    #[error("alpha {alpha} outside [{min}, {max}]")]
    AlphaOutOfRange { alpha: f64, min: f64, max: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("T-transform weight {0} outside [0, 1]")]
    TOutOfRange(f64),

    #[error("matrix is not Hermitian (deviation {0})")]
    NotHermitian(f64),

    #[error("matrix trace is {0}, expected 1")]
    NotUnitTrace(f64),

    #[error("operation requires {expected}")]
    WrongInstanceKind { expected: &'static str },

    #[error("linear program failed: {0}")]
    Solver(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
