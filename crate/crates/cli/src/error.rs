use std::path::{Path, PathBuf};

use serde_json::json;

/// Failure of a command, split by who has to act on it.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed input files, flags or configuration.
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// The analysis itself failed on valid input.
    #[error(transparent)]
    Pipeline(#[from] idi_core::Error),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Pipeline(_) => 1,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Input(_) => "input",
            CliError::Io { .. } => "io",
            CliError::Pipeline(_) => "pipeline",
        };
        let detail = match self {
            CliError::Pipeline(e) => serde_json::to_value(format!("{e:?}")).unwrap_or_default(),
            _ => serde_json::Value::Null,
        };
        json!({
            "error": {
                "kind": kind,
                "message": self.to_string(),
                "detail": detail,
                "exit_code": self.exit_code(),
            }
        })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
