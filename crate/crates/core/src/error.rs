use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function (negative time, empty window).
    #[error("domain error: {0}")]
    Domain(String),

    /// A constructed value would violate its invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// A text input could not be parsed.
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("not found: {0}")]
    NotFound(String),

    /// Grid functions or operators built on incompatible grids.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator is not positive (semi)definite: {0}")]
    NotSpd(String),

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    /// Sample times of two trajectories do not line up.
    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical pipeline rather than of its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence { .. } | Error::NotSpd(_))
    }
}
