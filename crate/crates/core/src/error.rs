use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("tiling error: {0}")]
    Tiling(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("edge detection failed: {0}")]
    Detection(String),

    #[error("open support: {0}")]
    OpenSupport(String),

    #[error("undefined metric: {0}")]
    Undefined(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("refusing to overwrite existing output {0}")]
    Collision(PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
