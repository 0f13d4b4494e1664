use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input outside an operation's domain (size mismatch, empty graph, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural precondition the caller was supposed to guarantee did not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),

    #[error("search failed: {0}")]
    Search(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
