use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched space kinds, unsupported system for an operation, bad CLI input.
    #[error("usage error: {0}")]
    Usage(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// A bounded search (orbit visitation, preimage) ran out of horizon.
    #[error("search failure: {0}")]
    SearchFailure(String),

    /// An invariant that the construction guarantees was observed to fail.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
