use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of an analysis does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("training diverged at epoch {epoch}: loss = {loss:e}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
