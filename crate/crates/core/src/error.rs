use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no edges")]
    NoEdges,

    #[error("vertex {vertex} out of range for graph with {vertex_count} vertices")]
    VertexOutOfRange { vertex: u64, vertex_count: u64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("incomplete coverage: {0}")]
    Coverage(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown graph id {0:?}")]
    UnknownGraph(String),

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("bad model file: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

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
