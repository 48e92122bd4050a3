use thiserror::Error;

/// Errors raised by the library. The variants map one-to-one onto the exit
/// code taxonomy of the command-line harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Mismatched arities, fiber dimensions or owning groups.
    #[error("structural error: {0}")]
    Structural(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The requested computation has no implementation for this input.
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solver failed to converge after {iterations} iterations (residual {residual:e})")]
    Numerical { iterations: usize, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn capability(msg: impl Into<String>) -> Error {
    Error::Capability(msg.into())
}
