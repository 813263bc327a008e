use std::io;

/// Errors produced by the propagation, fitting and identification pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("index {index} out of range (max {max})")]
    Index { index: usize, max: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("capacity guard: {requested} candidates exceeds limit {limit}")]
    Capacity { requested: u128, limit: u128 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("incompatible inner-product cache: {0}")]
    Incompatible(String),

    #[error("density fit did not converge after {iterations} iterations (max residual {max_residual:e})")]
    FitFailure {
        iterations: usize,
        max_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("model evaluation failed at node {node:?}: {source}")]
    ModelEvaluation {
        node: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("input outside model domain: {0}")]
    Domain(String),

    #[error("no synchronization within {horizon} s")]
    Timeout { horizon: f64 },

    #[error("singular clutch state: {0}")]
    Singularity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
