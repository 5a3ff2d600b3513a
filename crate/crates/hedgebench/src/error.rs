use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the hedging library.
#[derive(Debug, Error)]
pub enum HedgeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("path row {row}: {source}")]
    PathRow {
        row: usize,
        #[source]
        source: Box<HedgeError>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("autodiff error: {0}")]
    Autodiff(String),
}

impl HedgeError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        HedgeError::InvalidInput(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        HedgeError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HedgeError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HedgeError>;
