//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated (empty set, odd ring size, …).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested Hilbert space exceeds the dense/sparse site caps.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Matrix dimensions do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An iterative solver failed to converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A numerical accuracy contract was violated.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The operation needs data this path cannot provide (e.g. full spectrum).
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
