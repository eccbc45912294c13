use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergent series: alpha/lambda = {beta} must exceed 1")]
    Divergent { beta: f64 },

    #[error("exact dual sum requires an even exponent in {{2, 4, 6}}, got alpha/lambda = {beta}")]
    UnsupportedExactMode { beta: f64 },

    #[error("operation requires product weights")]
    RequiresProductWeights,

    #[error("no good residue found for p = {p} after {tries} draws")]
    SearchFailure { p: u64, tries: usize },

    #[error("residue map is missing prime {0}")]
    MissingPrime(u64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
