//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a documented precondition (negative power, stream
    /// count above the available rank, and so on).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical routine could not produce a trustworthy result
    /// (SVD non-convergence, singular combiner Gram matrix, ...).
    #[error("numerical failure: {0}")]
    Numerics(String),

    /// Configuration file or CLI override problem.
    #[error("config error ({path}): {msg}")]
    Config { path: String, msg: String },

    /// I/O failure, annotated with the path involved.
    #[error("io error ({path}): {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerics(msg: impl Into<String>) -> Self {
        Error::Numerics(msg.into())
    }
}
