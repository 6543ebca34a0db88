use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    /// Failure to write under the output directory; the directory is part of
    /// the configuration, so this is reported as a config error.
    pub(crate) fn output(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Config(format!("cannot write {}: {err}", path.display()))
    }
}

impl From<driftwatch::Error> for CliError {
    fn from(err: driftwatch::Error) -> Self {
        use driftwatch::Error as E;
        match err {
            E::Config(m) => CliError::Config(m),
            E::Data(m) => CliError::Data(m),
            E::ParseCell { .. }
            | E::DimensionMismatch { .. }
            | E::Io { .. }
            | E::Csv(_) => CliError::Data(err.to_string()),
            E::InvalidInput(m) => CliError::Internal(m),
            E::Json(_) => CliError::Internal(err.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
