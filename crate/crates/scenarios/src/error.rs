use qdyn::QError;
use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::opexpr::OpError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{field}: {source}")]
    Parse { field: String, source: ParseError },
    #[error("{field}: {source}")]
    Eval { field: String, source: EvalError },
    #[error("{field}: {source}")]
    Operator { field: String, source: OpError },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Solver(#[from] QError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ScenarioError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ScenarioError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 1 for solver or I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Solver(_) | ScenarioError::Io { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;
