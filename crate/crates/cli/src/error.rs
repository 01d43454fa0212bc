use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] multidelay::Error),
    #[error("cannot read config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Library(e) => e.kind(),
            CliError::Config { .. } => "Config",
            CliError::Io { .. } => "Io",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Library(e) if e.is_input_error() => 2,
            CliError::Library(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() })
    }
}

/// Lifts any library error type into [`CliError`].
pub fn lib<E: Into<multidelay::Error>>(e: E) -> CliError {
    CliError::Library(e.into())
}
