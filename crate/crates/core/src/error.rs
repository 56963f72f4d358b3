use thiserror::Error;

/// Errors produced by the CHEM library.
#[derive(Debug, Error)]
pub enum ChemError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("evaluation budget exceeded: {requested} > {limit}")]
    Budget { requested: usize, limit: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ChemError>;

pub(crate) fn invalid(msg: impl Into<String>) -> ChemError {
    ChemError::InvalidInput(msg.into())
}
