use thiserror::Error;

/// Errors produced by the distance computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("seminorm kernel is larger than the scalars: {0}")]
    KernelViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
