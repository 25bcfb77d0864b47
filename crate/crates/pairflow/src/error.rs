//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any pairflow operation.
#[derive(Debug, Error)]
pub enum Error {
    /// Problem too small or structurally unusable (e.g. fewer than two assets).
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// Two matrices or graphs that must share a dimension do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Observed volume is nonzero on a cell the mask marks as unlisted.
    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    /// CSV or config text that does not parse; carries the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A record that parses but violates a validity rule; 1-based line number.
    #[error("validation error at line {line}: {msg}")]
    Validation { line: usize, msg: String },

    /// A requested time window has no records.
    #[error("empty window: {0}")]
    EmptyWindow(String),

    /// Not enough data points for a statistic (e.g. fewer than 3 common bases).
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Share statistics are undefined on zero total volume.
    #[error("undefined share: total volume is zero")]
    UndefinedShare,

    /// Edge budget outside [N-1, N(N-1)/2].
    #[error("infeasible edge budget: {0}")]
    InfeasibleBudget(String),

    /// KKT system could not be factorized even after regularization.
    #[error("degenerate KKT system (last regularization shift {shift:e})")]
    DegenerateSystem { shift: f64 },

    /// Invalid configuration value or unknown config key.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 0 success, 2 missing/unreadable input,
    /// 3 data validation failure, 4 infeasible configuration, 5 internal error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::EmptyWindow(_)
            | Error::InsufficientData(_)
            | Error::UndefinedShare
            | Error::InconsistentInput(_)
            | Error::DimensionMismatch(_) => 3,
            Error::InfeasibleBudget(_) | Error::InvalidProblem(_) | Error::InvalidConfig(_) => 4,
            Error::DegenerateSystem { .. } | Error::Json(_) => 5,
        }
    }
}
