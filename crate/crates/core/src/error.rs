use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported magic number {0:?}")]
    UnsupportedMagic(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated pixel data: expected {expected} samples, got {got}")]
    Truncated { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver diverged at iteration {iteration}: non-finite value in {stage}")]
    Divergence { iteration: usize, stage: &'static str },

    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
