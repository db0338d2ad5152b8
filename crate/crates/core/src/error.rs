use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("item {item_id}: {message}")]
    InvalidItem { item_id: String, message: String },
    #[error("probability row for examinee {examinee_id}, item {item_id}: {message}")]
    InvalidProbabilities {
        examinee_id: String,
        item_id: String,
        message: String,
    },
    #[error("no parameters for item {0}")]
    MissingParams(String),
    #[error("item {0} has a degenerate response column (all 0 or all 1)")]
    DegenerateItem(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("undefined statistic: {0}")]
    Undefined(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::InvalidItem { .. } => "invalid_item",
            Error::InvalidProbabilities { .. } => "invalid_probabilities",
            Error::MissingParams(_) => "missing_params",
            Error::DegenerateItem(_) => "degenerate_item",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Undefined(_) => "undefined",
            Error::Config(_) => "config",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
