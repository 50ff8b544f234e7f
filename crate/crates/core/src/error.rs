use std::path::PathBuf;

/// Errors raised by the solvers, checks and file readers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("input error: {0}")]
    Input(String),

    /// The integrand returned a non-finite value at the node pair `(i, j)`.
    #[error("non-finite integrand value at node pair ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("pointwise inversion failed at node {node} (x = {x}): {reason}")]
    Inversion { node: usize, x: f64, reason: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
