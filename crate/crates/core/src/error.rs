use thiserror::Error;

/// Errors raised by the operator, bound and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BellError {
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("degenerate coefficients: {0}")]
    DegenerateCoefficients(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("power iteration did not converge: {0}")]
    Convergence(String),
    #[error("not a sign function: {0}")]
    NotSignFunction(String),
}

pub type Result<T, E = BellError> = std::result::Result<T, E>;
