use std::path::PathBuf;

use slugbot_core::{ConfigError, Error as CoreError};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("trace: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace line {line}: {message}")]
    Trace { line: u64, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Analysis(String),
    #[error("{0}")]
    Usage(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Self::Json { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
