use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad arguments or an unsupported request (wrong sizes, invalid sites, etc).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A configured resource cap (dense dimension, term count, memory) would be exceeded.
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    /// Nested commutator expansion exceeded its term-count cap.
    #[error("term-count cap {cap} exceeded at commutator order {order_reached} ({terms} terms)")]
    Truncation {
        order_reached: usize,
        terms: usize,
        cap: usize,
    },

    /// An iterative numerical procedure failed (non-convergence, breakdown, degenerate fit).
    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        best_residual: Option<f64>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical {
            message: msg.into(),
            best_residual: None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
