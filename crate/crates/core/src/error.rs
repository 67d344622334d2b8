use thiserror::Error;

use crate::series::Var;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("variable mismatch: {0} vs {1}")]
    VariableMismatch(Var, Var),
    #[error("window too shallow: need floor <= {needed}, have {have}")]
    WindowTooShallow { needed: i64, have: i64 },
    #[error("bi-series expansion regions differ")]
    RegionMismatch,
    #[error("only order-zero delta terms can be flipped (got order {0})")]
    OrderNotZero(u32),
    #[error("polynomial does not annihilate the distribution at x1^{e1} x2^{e2}")]
    AnnihilationFails { e1: i64, e2: i64 },
    #[error("compatibility fails: {0}")]
    CompatibilityFails(String),
    #[error("degree {degree} exceeds watermark {limit}")]
    WatermarkExceeded { degree: usize, limit: usize },
    #[error("substitution {0} has a nonzero translation part")]
    NonzeroTranslation(String),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("no locality witness found for {0}")]
    WitnessNotFound(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unknown suite {name:?}; valid suites: {valid}")]
    UnknownSuite { name: String, valid: String },
    #[error("invalid rational in field {field}: {reason}")]
    InvalidRational { field: String, reason: String },
    #[error("invalid config field {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
