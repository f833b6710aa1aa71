use thiserror::Error;

/// Errors raised by quantum-object operations and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity exceeded: {what} has dimension {dim}, cap is {cap}")]
    Capacity {
        what: String,
        dim: usize,
        cap: usize,
    },
    #[error("cannot normalize an object with zero norm")]
    Normalization,
    #[error("integration failed at t = {t}: {reason}")]
    Convergence { t: f64, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("eigenvector matrix is ill-conditioned (condition number {0:e})")]
    Conditioning(f64),
    #[error("trajectory with seed {seed:#018x} failed: {source}")]
    Trajectory {
        seed: u64,
        #[source]
        source: Box<QError>,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = QError> = std::result::Result<T, E>;
