use std::path::PathBuf;

use thiserror::Error;

/// Failure of a command, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad, missing or unknown configuration. Exit status 2.
    #[error("configuration error: {0}")]
    Config(String),

    /// The model or a numerical stage rejected the inputs. Exit status 3.
    #[error(transparent)]
    Model(#[from] resfluor::Error),

    /// Reading or writing a file failed. Exit status 4.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(resfluor::Error::Io(_)) => 4,
            CliError::Model(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
