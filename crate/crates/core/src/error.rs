use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("input too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("parameter out of domain: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("optimizer did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("infeasible: {0}")]
    Infeasible(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
