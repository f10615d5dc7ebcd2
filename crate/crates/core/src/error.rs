use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shape or grid mismatch between objects that must agree.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Dense-matrix size exceeds the configured budget.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A scanned spectral parameter sits on (numerically) an eigenvalue of the generator.
    #[error("resolvent is numerically singular at lambda = {lambda}")]
    InBandEigenvalue { lambda: f64 },

    #[error("non-finite state at t = {time}")]
    Blowup { time: f64 },

    /// Every offending field of a configuration document.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o error on {path}: {source}")]
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
