use thiserror::Error;

/// Errors raised by parsing, validation and the solvers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SfError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("infeasible instance: {0}")]
    Infeasible(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, SfError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SfError::Invalid(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(SfError::Precondition(msg.into()))
}
