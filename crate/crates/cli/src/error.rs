use ckc_core::CkcError;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },

    /// `row` is the 1-based line of the file (header is line 1), `col` the 1-based column.
    #[error("cannot parse {value:?} at row {row}, column {col}")]
    ParseError { row: usize, col: usize, value: String },

    #[error("need at least {required} data rows, got {rows}")]
    TooFewRows { rows: usize, required: usize },

    #[error("csv: {0}")]
    Csv(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Core(#[from] CkcError),
}

impl CliError {
    /// Variant name; core errors report the core variant.
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "Io",
            CliError::ParseError { .. } => "ParseError",
            CliError::TooFewRows { .. } => "TooFewRows",
            CliError::Csv(_) => "Csv",
            CliError::InvalidInput(_) => "InvalidInput",
            CliError::Core(e) => e.name(),
        }
    }

    /// Machine-readable error record written to stderr on failure.
    pub fn record(&self) -> Value {
        let mut record = json!({ "error": self.name(), "message": self.to_string() });
        if let CliError::ParseError { row, col, .. } = self {
            record["row"] = json!(row);
            record["col"] = json!(col);
        }
        record
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Csv(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
