use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// The config (or environment) is malformed or violates a constraint.
    #[error("invalid config at `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error(transparent)]
    Solver(#[from] schwarz_coupler::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for validation failures, 1 for everything else. Non-convergence is
    /// not an error (files are still written); see [`crate::RunSummary`].
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            _ => 1,
        }
    }
}
