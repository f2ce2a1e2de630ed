use thiserror::Error;

/// Errors raised by model construction, solvers and simulators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),

    #[error("transition matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("{what} = {value} violates {bound}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        bound: String,
    },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("{what} too large: {size} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        size: u64,
        limit: u64,
    },

    #[error("trial did not terminate within {cap} channel uses")]
    NonTerminating { cap: u64 },

    #[error("summation tail not converged: summand {summand:e} at n_max = {n_max}")]
    TailNotConverged { summand: f64, n_max: u64 },

    #[error("output {0} is unreachable under the capacity-achieving output distribution")]
    UnreachableOutput(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(what: &'static str, value: f64, bound: impl Into<String>) -> Error {
    Error::OutOfRange {
        what,
        value,
        bound: bound.into(),
    }
}
