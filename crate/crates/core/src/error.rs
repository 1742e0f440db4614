use alloc::string::String;

/// Errors raised by kernel evaluation, forcing validation and verdict logic.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular point: {0} is not defined at the origin")]
    Singularity(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("force coverage error: {0}")]
    Coverage(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("wrong regime: {0}")]
    WrongRegime(String),
    #[error("quadrature failed to reach tolerance: {0}")]
    Quadrature(String),
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = core::result::Result<T, Error>;
