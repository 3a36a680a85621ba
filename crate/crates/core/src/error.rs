//! Error type shared across the crate.
//!
//! Errors split into two families mirrored by the CLI exit codes:
//! configuration problems (bad parameters, exit code 3) and data problems
//! (malformed input, shape mismatches, exit code 2).

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0} vs {1}")]
    ShapeMismatch(String, String),

    #[error("table is not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("table has a non-positive entry at index {0}")]
    NonPositiveEntry(usize),

    #[error("symbol {symbol} out of range for variable {variable} ({cells} cells)")]
    SymbolOutOfRange {
        variable: usize,
        symbol: u16,
        cells: usize,
    },

    #[error("no training mass for class {0}")]
    NoTrainingMass(String),

    #[error("weak learner no better than chance (epsilon = {epsilon})")]
    WeakLearnerAtChance { epsilon: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 3 for configuration errors, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 3,
            _ => 2,
        }
    }
}
