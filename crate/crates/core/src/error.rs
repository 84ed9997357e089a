//! One error type for the whole crate.
//!
//! Variants are grouped the way the CLI reports them: configuration
//! problems, data problems, numeric/training problems. Keeping the split
//! explicit here means the binary can map errors to exit codes without
//! string matching.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AuditError {
    /// Bad run configuration: unknown keys, missing sections, invalid
    /// attacker names, contradictory settings.
    #[error("config error: {0}")]
    Config(String),

    /// A parameter value outside its documented domain (negative noise,
    /// zero bandwidth, epsilon <= 0, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Mismatched shapes between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A requested split or sample does not fit in the available rows.
    #[error("size error: {0}")]
    Size(String),

    /// Unparseable cell in an input file. `row` is the 1-based data row
    /// (the header is not counted), `col` the 1-based column.
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    /// Structurally bad data: ragged rows, empty files, non-finite values.
    #[error("data error: {0}")]
    Data(String),

    /// Schema violation, e.g. a declared binary column holding other values.
    #[error("schema error: {0}")]
    Schema(String),

    /// A column with zero variance where standardization needs spread.
    #[error("degenerate column {name:?}: {message}")]
    DegenerateColumn { name: String, message: String },

    /// A label vector with only one class where a metric needs both.
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    /// Non-finite values produced by numeric code outside of training.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at step {step}: {message}")]
    TrainingDiverged { step: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Coarse classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

impl AuditError {
    pub fn class(&self) -> ErrorClass {
        use AuditError::*;
        match self {
            Config(_) | Parameter(_) => ErrorClass::Config,
            Dimension(_) | Size(_) | Parse { .. } | Data(_) | Schema(_)
            | DegenerateColumn { .. } | DegenerateLabels(_) | Io(_) => ErrorClass::Data,
            Numeric(_) | TrainingDiverged { .. } => ErrorClass::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, AuditError>;
