use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] entanglelink_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid job: {0}")]
    Validation(String),
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("fixture {name} not found (looked for {path})")]
    MissingFixture { name: String, path: PathBuf },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(_) => "numerical",
            CliError::Io { .. } => "io",
            CliError::Json { .. } => "json",
            CliError::Validation(_) => "validation",
            CliError::Format { .. } => "format",
            CliError::MissingFixture { .. } => "fixture",
            CliError::Csv(_) => "csv",
        }
    }

    /// Machine-readable form printed on failure.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Out { error: self.kind(), message: self.to_string() }).unwrap()
    }
}
