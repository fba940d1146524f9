use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("negative power requires mean-free field (zero mode = {0:e})")]
    NonZeroMean(f64),

    #[error("negative time {0} (analytic continuation not supported)")]
    NegativeTime(f64),

    #[error("field is not real-valued: imaginary part {0:e} exceeds tolerance")]
    NotReal(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not a generator in our class: {0}")]
    NotAGenerator(String),

    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("non-uniform time grid: {0}")]
    NonUniformGrid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
