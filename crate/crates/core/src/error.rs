use thiserror::Error;

/// Errors raised by the simulator and analytic engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration or sweep input that violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Rank-deficient or ill-conditioned Gram matrix.
    #[error("numerical singularity: {0}")]
    Singular(String),
    /// Inputs that do not belong together (shapes, configs, links).
    #[error("contract error: {0}")]
    Contract(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
