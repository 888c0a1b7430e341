use std::path::PathBuf;

use crate::domain::Finding;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid interval [{lb}, {ub}]: lower bound must not exceed upper bound")]
    InvalidInterval { lb: f64, ub: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("percent change is undefined for a zero base value")]
    UndefinedChange,

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("dataset failed validation with {} error(s)", .0.iter().filter(|f| f.is_error()).count())]
    Validation(Vec<Finding>),

    #[error("no records in {0}")]
    NoRecords(String),

    #[error("{source_name}, line {line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("{source_name}, line {line}: duplicate key {key}")]
    DuplicateKey {
        source_name: String,
        line: u64,
        key: String,
    },

    #[error("{source_name}: unknown column `{column}`")]
    UnknownColumn { source_name: String, column: String },

    #[error("{source_name}: missing column `{column}`")]
    MissingColumn { source_name: String, column: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
