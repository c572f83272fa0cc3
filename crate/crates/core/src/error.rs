use std::path::PathBuf;

use crate::part::PartLabel;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty mesh")]
    EmptyMesh,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("invalid segmentation: {0}")]
    Segmentation(String),

    #[error("part {0} is not present")]
    MissingPart(PartLabel),

    #[error("part {0} has no faces")]
    EmptyPart(PartLabel),

    #[error("no interface between {0} and {1}")]
    MissingInterface(PartLabel, PartLabel),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("plane does not intersect the mesh")]
    EmptyIntersection,

    #[error("cross-section chain is open ({} points collected)", .partial.len())]
    OpenChain { partial: Vec<crate::Vec3> },

    #[error("non-manifold edge ({0}, {1}) in section topology")]
    NonManifoldEdge(usize, usize),

    #[error("measurement failed for part {part}: {message}")]
    Measurement { part: PartLabel, message: String },

    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    Checksum { stored: String, computed: String },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
