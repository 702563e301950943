use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("tensor `{name}`: payload is missing ({path})")]
    MissingPayload { name: String, path: PathBuf },

    #[error("tensor `{name}`: shape {shape:?} needs {expected} bytes, payload has {actual}")]
    ShapeMismatch {
        name: String,
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("tensor `{name}`: element {index} is not finite")]
    NonFinite { name: String, index: usize },

    #[error("tensor `{name}`: mask value {value} at element {index} is outside [0, 1]")]
    MaskRange {
        name: String,
        index: usize,
        value: f32,
    },

    #[error("invalid tensor name `{0}` (allowed: [A-Za-z0-9_]+)")]
    InvalidName(String),

    #[error("duplicate tensor name `{0}`")]
    DuplicateName(String),

    #[error("bundle has no tensor named `{0}`")]
    MissingTensor(String),

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("grid mismatch: features are {features:?}, masks are {masks:?}")]
    GridMismatch {
        features: (usize, usize),
        masks: (usize, usize),
    },

    #[error("mask for query {query_id} has near-zero total weight {weight:e}")]
    DegenerateMask { query_id: u32, weight: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("json error in {path}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::MissingPayload { .. })
    }
}
