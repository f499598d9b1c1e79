use thiserror::Error;

use crate::archive::IndividualRef;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("variable index {index} out of range for {n_features} feature(s)")]
    VariableOutOfRange { index: usize, n_features: usize },

    #[error("non-finite output {value} at row {row}")]
    NonFinite { row: usize, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid individual reference {0}")]
    InvalidRef(IndividualRef),

    #[error("no completed generation to select from")]
    NothingToSelect,

    #[error("naive evaluation refused: expansion of {expansion} nodes exceeds limit {limit}")]
    ExpansionLimit { expansion: u128, limit: u128 },

    #[error("seeding failed: slot {slot} produced non-finite semantics after {attempts} attempts ({source})")]
    SeedingFailed {
        slot: usize,
        attempts: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("line {line}, column {column}: cannot parse {cell:?} as a number")]
    ParseCell { line: u64, column: usize, cell: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: u64, expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
