use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum IrgError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A size or budget guard refused the request. Carries the estimate that tripped it.
    #[error("resource guard: {0}")]
    Guard(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, IrgError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(IrgError::InvalidInput(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(IrgError::Precondition(msg.into()))
}
