use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("cannot parse cell at row {row}, column '{column}': {value:?}")]
    Cell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column '{0}' not found")]
    MissingColumn(String),

    #[error("target must contain both classes, found only class {0}")]
    SingleClass(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not enough rows: {0}")]
    TooFewRows(String),

    #[error("network error: {0}")]
    Network(String),

    #[error("registry cross-check failed for '{name}': {detail}")]
    RegistryDrift { name: String, detail: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("variable sets differ: {0}")]
    VariableMismatch(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
