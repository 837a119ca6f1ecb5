use thiserror::Error;

/// Errors raised by the ranking library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A malformed line in an input file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An exhaustive oracle was asked for more items than it can enumerate.
    #[error("enumeration guard: universe of {size} items exceeds the limit of {limit}")]
    EnumerationGuard { size: usize, limit: usize },

    /// A pairwise statistic was requested for systems never compared directly.
    #[error("systems {0} and {1} were never compared directly")]
    NoComparison(usize, usize),

    /// An internal consistency check failed.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
