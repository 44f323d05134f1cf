use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record in {path} line {line}: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("missing modality file: {0}")]
    MissingFile(PathBuf),
    #[error("duplicate participant id: {0}")]
    DuplicateParticipant(String),
    #[error("invalid session: {0}")]
    InvalidSession(String),
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParameters(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("clustering error: {0}")]
    Clustering(String),
    #[error("unknown cluster id {0}")]
    UnknownCluster(usize),
    #[error("empty cluster {cluster} for modality {modality}")]
    EmptyCluster { modality: String, cluster: usize },
    #[error("graph mismatch: {0}")]
    GraphMismatch(String),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
