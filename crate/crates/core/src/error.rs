use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThdError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: expected {expected} fields, found {found}")]
    Arity {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("unknown column `{0}` named in schema")]
    UnknownColumn(String),
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("more than one label column (`{0}`, `{1}`)")]
    DuplicateLabel(String, String),
    #[error("group is empty")]
    EmptyGroup,
    #[error("row id {0} is out of range")]
    InvalidRow(usize),
    #[error("dataset has no label column")]
    NoLabel,
    #[error("group has no labeled rows")]
    NoLabeledRows,
    #[error("no analysis columns remain after exclusions")]
    NoAnalysisColumns,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown format `{0}`")]
    UnknownFormat(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, ThdError>;
