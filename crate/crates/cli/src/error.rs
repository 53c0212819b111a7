use std::path::PathBuf;

use netglm::error::ErrorKind;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] netglm::Error),
    #[error("config {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error("{0}")]
    Config(String),
    #[error("serializing output: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Machine-readable failure record printed to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub exit_code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::AucUndefined => 4,
            },
            CliError::Serialize(_) => 3,
            _ => 2,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let code = self.exit_code();
        ErrorRecord {
            status: "error",
            exit_code: code,
            kind: match code {
                3 => "numerical",
                4 => "auc_undefined",
                _ => "input",
            },
            message: self.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
