use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("sequence JSON at `{field}` (line {line}, column {column}): {message}")]
    SequenceJson { field: String, line: usize, column: usize, message: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] cadrev_core::model::ModelError),
    #[error(transparent)]
    Geometry(#[from] cadrev_core::geometry::GeometryError),
    #[error(transparent)]
    Perturb(#[from] cadrev_core::perturb::PerturbError),
    #[error(transparent)]
    Metrics(#[from] cadrev_core::metrics::MetricsError),
    #[error(transparent)]
    Cad(#[from] cadrev_core::cad::CadError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Attaches a path to IO errors.
pub trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io { path: path.into(), source })
    }
}

pub(crate) fn format_error(path: impl Into<PathBuf>, message: impl Into<String>) -> Error {
    Error::Format { path: path.into(), message: message.into() }
}
