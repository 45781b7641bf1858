use thiserror::Error;

use crate::lvpp::LvppTrace;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix{}", match .newton_iter {
        Some(it) => format!(" at Newton iteration {it}"),
        None => String::new(),
    })]
    SingularMatrix { newton_iter: Option<usize> },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("build error: {0}")]
    Build(String),

    /// Outer proximal loop failed; carries whatever trace was accumulated.
    #[error("outer iteration {k} failed: {source}")]
    Outer {
        k: usize,
        source: Box<Error>,
        trace: Box<LvppTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn build(msg: impl Into<String>) -> Self {
        Error::Build(msg.into())
    }
}
