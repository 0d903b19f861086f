use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("all input vectors are degenerate; basis would be empty")]
    EmptyBasis,
    #[error("subspace spans the whole space; no orthogonal complement")]
    NoComplement,
    #[error("knots must be strictly increasing (violated at knot {0})")]
    KnotOrder(usize),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn dim(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
