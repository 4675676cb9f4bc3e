use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] harmonrank::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid input {}: {source}", path.display())]
    Input {
        path: PathBuf,
        source: harmonrank::Error,
    },
    #[error("{0}")]
    Mismatch(String),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad input or configuration, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_invalid_input() => 1,
            CliError::Output { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
