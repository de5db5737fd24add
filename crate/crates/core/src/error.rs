use thiserror::Error;

use crate::flow::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("field does not belong to this grid (expected {expected} nodes, got {found})")]
    GridMismatch { expected: usize, found: usize },

    #[error("field is not admissible: {0}")]
    NotAdmissible(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("step {step} did not converge: {diagnostics}")]
    NotConverged {
        step: usize,
        diagnostics: String,
        partial: Box<Trajectory>,
    },

    #[error("reference solver failed: {0}")]
    Reference(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
