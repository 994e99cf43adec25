use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BenchError {
    /// A problem with the setup file. `row` is the 1-based data row, 0 for
    /// the header or the file as a whole.
    #[error("{path}: row {row}: {message}")]
    Setup { path: PathBuf, row: usize, message: String },

    #[error("unknown {what} '{name}'")]
    Unknown { what: &'static str, name: String },

    #[error("task {task} failed: {message}")]
    Task { task: String, message: String },

    #[error("artifact {name}: {message}")]
    Artifact { name: String, message: String },

    #[error("verifier: {0}")]
    Verifier(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] kgxbench::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }

    pub(crate) fn artifact(name: &str, message: impl std::fmt::Display) -> Self {
        BenchError::Artifact { name: name.to_owned(), message: message.to_string() }
    }

    /// Setup problems are usage errors; everything else is a run failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, BenchError::Setup { .. } | BenchError::Unknown { .. })
    }
}
