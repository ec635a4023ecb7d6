//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while loading, transforming or anonymizing a
/// table. CLI exit codes are derived from the variant (see the binary crate).
#[derive(Debug, Error)]
pub enum SliceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("header mismatch at column {position}: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        position: usize,
        expected: String,
        found: String,
    },

    #[error("row {row}: expected {expected} cells, found {found}")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, attribute {attribute:?}: value {value:?} not in the declared domain")]
    UnknownValue {
        row: usize,
        attribute: String,
        value: String,
    },

    #[error("row {row}, attribute {attribute:?}: {value} outside declared bounds [{min}, {max}]")]
    OutOfBounds {
        row: usize,
        attribute: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("table has no usable rows")]
    EmptyTable,

    #[error("attribute {0:?} is not categorical")]
    NotCategorical(String),

    #[error("attribute {0:?} is not continuous")]
    NotContinuous(String),

    #[error("attribute {0:?} has fewer than two observed values; correlation is undefined")]
    DegenerateDomain(String),

    #[error("no attribute in this table is flagged sensitive")]
    NoSensitive,

    #[error("no attribute named {0:?}")]
    UnknownAttribute(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bucket list is not a partition of the table's rows: {0}")]
    MalformedBuckets(String),

    #[error("privacy requirement unsatisfiable: max disclosure probability {max_p} exceeds 1/l = {threshold}")]
    Unsatisfiable { max_p: f64, threshold: f64 },

    #[error("candidate enumeration for bucket {bucket} needs {required} tuples, above the cap of {cap}")]
    CapExceeded {
        bucket: usize,
        required: u128,
        cap: u128,
    },
}

pub type Result<T> = std::result::Result<T, SliceError>;
