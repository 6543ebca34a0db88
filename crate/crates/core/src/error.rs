use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the drift-detection and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// The caller asked for something the configuration cannot express
    /// (missing column, bad batch size, unknown family, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The input data is malformed or insufficient.
    #[error("data error: {0}")]
    Data(String),

    /// A cell that should be numeric could not be parsed.
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    /// A precondition of an algorithm was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
