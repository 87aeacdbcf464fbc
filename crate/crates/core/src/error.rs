use thiserror::Error;

use crate::block_partition::DecompositionFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{n} spins exceed the enumeration cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("degenerate conditioning: {0}")]
    Degenerate(String),
    #[error("search budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error("chain is not reversible (detailed-balance residual {0:e})")]
    NonReversible(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("decomposition failed: {0}")]
    Decomposition(#[from] DecompositionFailure),
    #[error("partition refinement failed: {0}")]
    Refinement(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
