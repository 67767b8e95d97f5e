use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by objectives, line searches, samplers, solvers and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: wrong dimension, non-finite component, empty vector.
    #[error("invalid input: {0}")]
    Input(String),

    /// Invalid solver or experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A floating point breakdown during an iteration. Carries the iterate
    /// at which it happened.
    #[error("numeric failure: {message}")]
    Numeric { message: String, iterate: Vec<f64> },

    /// The requested quantity is not defined for this objective.
    #[error("unsupported objective: {0}")]
    UnsupportedObjective(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn numeric(message: impl Into<String>, iterate: &[f64]) -> Self {
        Error::Numeric {
            message: message.into(),
            iterate: iterate.to_vec(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
