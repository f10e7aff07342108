use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite integrand value {value} at node {node}")]
    NonFinite { node: f64, value: f64 },

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("argument {value} outside the domain: {reason}")]
    Domain { value: f64, reason: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("model assumption violated: {0}")]
    Assumption(String),

    #[error("iteration diverged at step {step}")]
    Divergence { step: usize },

    #[error("state evolution reached perfect recovery at step {step}")]
    PerfectRecovery { step: usize },

    #[error("weak-recovery threshold is infinite (integral vanishes)")]
    InfiniteThreshold,

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>) -> Error {
    Error::Numeric(msg.into())
}
