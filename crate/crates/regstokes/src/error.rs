use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Schema { message: String, line: Option<usize> },
    #[error("[{section}] does not apply to scenario \"{scenario}\"")]
    WrongSection { section: String, scenario: String },
    #[error("{}{field}: {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        field: String,
        reason: String,
        line: Option<usize>,
    },
    #[error(transparent)]
    Core(regstokes_core::Error),
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("simulation: {0}")]
    Core(#[from] regstokes_core::Error),
    #[error("output: {0}")]
    Output(#[from] OutputError),
    #[error("{0}")]
    Usage(String),
}
