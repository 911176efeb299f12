use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request is well formed but not supported by this backend.
    #[error("unsupported input: {0}")]
    Unsupported(String),

    /// An iterative method failed to reach its target.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A diagnostic refused to run because its hypotheses are violated.
    #[error("audit refused: {0}")]
    AuditRefused(String),

    /// Malformed text input.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
