use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of range: {value}")]
    Range { what: &'static str, value: i64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("score rejected: {0}")]
    Rejected(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric fault in neuron {neuron} at t={t}")]
    NumericFault { neuron: usize, t: u64 },

    #[error("all candidates silent")]
    Silent,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("model schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

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
