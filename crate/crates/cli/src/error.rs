use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Failures of a subcommand, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{failed} of {total} sweep points failed")]
    SweepFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::SweepFailed { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<cloudchamber::Error> for CliError {
    fn from(e: cloudchamber::Error) -> Self {
        if e.is_numerical() {
            CliError::Solver(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
