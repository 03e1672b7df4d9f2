//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: column `{column}`: {message}")]
    ParseValue {
        row: usize,
        column: String,
        message: String,
    },

    #[error("row {row}: column `{column}`: value must be positive, got {value}")]
    NonPositiveValue {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("row {row}: load factor {value} outside (0, 1]")]
    LoadFactorOutOfRange { row: usize, value: f64 },

    #[error("duplicate (firm, year) key: ({firm}, {year})")]
    DuplicateKey { firm: String, year: i32 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("restriction matrix is rank deficient")]
    RankDeficientRestrictions,

    #[error("term {0} is not part of the model")]
    UnknownTerm(String),

    #[error("log-likelihood is not finite: {0}")]
    NonFiniteLikelihood(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unknown hypothesis `{0}`")]
    UnknownHypothesis(String),

    #[error("fits are not nested: {0}")]
    NotNested(String),

    #[error("output elasticity of the distance function is zero; returns to scale undefined")]
    DegenerateScale,

    #[error("true coefficients violate the restriction set (max residual {max_residual:e})")]
    InvalidTruth { max_residual: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),
}
