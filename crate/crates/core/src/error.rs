use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unknown agent id {0}")]
    UnknownAgent(usize),

    #[error("speed {speed} kn exceeds current maximum {max} kn")]
    SpeedAboveMax { speed: f64, max: f64 },

    #[error("malformed transition matrix: {0}")]
    MalformedTransition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no candidate route from port {from} to port {to}")]
    NoRoute { from: usize, to: usize },

    #[error("unknown baseline mode `{0}`")]
    UnknownMode(String),

    #[error("non-finite gradient: {0}")]
    NonFiniteGradient(String),

    #[error("ragged input: {0}")]
    Ragged(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
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
