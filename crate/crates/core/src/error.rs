//! Crate-wide error type and process exit codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration: missing files, out-of-range fields, inconsistent
    /// manifest entries.
    #[error("config error: {0}")]
    Config(String),

    /// Layout generation could not satisfy the requested constraints.
    #[error("generation error: {0}")]
    Generation(String),

    /// API misuse, e.g. stepping a finished episode.
    #[error("usage error: {0}")]
    Usage(String),

    /// Numerical failure during training, with a diagnostic dump.
    #[error("training error: {0}")]
    Training(String),

    /// A verification claim failed (theory suite).
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 0 is success, config errors exit 2,
    /// I/O and serialization errors exit 3, failed verification exits 4,
    /// everything else exits 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Generation(_) => 2,
            Error::Io(_) | Error::Serde(_) => 3,
            Error::Verification(_) => 4,
            Error::Usage(_) | Error::Training(_) => 1,
        }
    }
}
