use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {count} invalid record(s); first: {first}")]
    Load {
        path: PathBuf,
        count: usize,
        first: String,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("missing embedding for id(s): {0}")]
    MissingEmbedding(String),

    #[error("embedding service: {0}")]
    Service(String),

    #[error("zero vector in cosine similarity")]
    ZeroVector,

    #[error("unknown topic id {0}")]
    UnknownTopic(i64),

    #[error("unknown clade id {0}")]
    UnknownClade(usize),

    #[error("clade {0} has no sentiment assignment")]
    UnassignedClade(usize),

    #[error("class {0} has no members")]
    EmptyClass(&'static str),

    #[error("kappa undefined: chance agreement is 1")]
    DegenerateKappa,

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
