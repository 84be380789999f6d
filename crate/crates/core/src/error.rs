use thiserror::Error;

/// Errors raised while building models, assembling LMIs, solving or simulating.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular: {0}")]
    Singular(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph is not connected")]
    DisconnectedGraph,
    #[error("model error: {0}")]
    ModelError(String),
    #[error("agent {0} has no oracle evaluator")]
    NoOracleEvaluator(usize),
    #[error("no unique fixed point: {0}")]
    NoUniqueFixedPoint(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
