use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("empty data body")]
    EmptyBody,

    #[error("row {row}, column {column:?}: cannot parse {value:?} as {kind}")]
    Parse {
        row: usize,
        column: String,
        value: String,
        kind: &'static str,
    },

    #[error("row {row}, column {column:?}: missing value")]
    Missing { row: usize, column: String },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid hierarchy for column {column:?}: {reason}")]
    Hierarchy { column: String, reason: String },

    #[error("theta={theta} non-identifiable")]
    NonIdentifiable { theta: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("negative entry {value} at record {row}, column {column:?}")]
    NegativeEntry {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("unknown technique {0:?}")]
    UnknownTechnique(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
