use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(spinmetro::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, msg: impl std::fmt::Display) -> Self {
        CliError::Config {
            field: field.into(),
            msg: msg.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Core(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl From<spinmetro::Error> for CliError {
    fn from(e: spinmetro::Error) -> Self {
        match e {
            spinmetro::Error::Validation(msg) => CliError::Validation(msg),
            other => CliError::Core(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
