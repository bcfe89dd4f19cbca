use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("point with norm {norm} lies outside the open unit ball")]
    OutsideBall { norm: f64 },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("gradient of the distance is undefined at coincident points")]
    CoincidentPoints,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown {kind} `{name}` in sealed vocabulary")]
    UnknownSymbol { kind: &'static str, name: String },

    #[error("{kind} id {id} out of range (size {size})")]
    IdOutOfRange {
        kind: &'static str,
        id: usize,
        size: usize,
    },

    #[error("relation {0} has no training facts")]
    EmptyRelation(usize),

    #[error("numeric abort: {0}")]
    NumericAbort(String),

    #[error("vocabulary hash mismatch for {kind}: checkpoint {expected}, data {actual}")]
    VocabMismatch {
        kind: &'static str,
        expected: String,
        actual: String,
    },

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
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
