use thiserror::Error;

/// Errors raised by the numerical and modelling layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("singular penalized system for term `{0}`")]
    SingularSystem(String),

    #[error("value {value} outside domain [{min}, {max}]")]
    OutsideDomain { value: f64, min: f64, max: f64 },

    #[error("unknown region label `{0}`")]
    UnknownRegion(String),

    #[error("invalid adjacency: {0}")]
    InvalidAdjacency(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all candidate fits failed: {0}")]
    AllCandidatesFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
