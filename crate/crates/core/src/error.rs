//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration field failed validation. `field` is a
    /// dotted path such as `grids[0].spacing` so callers can point at the
    /// offending entry.
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    /// A user position coincides exactly with the base station, so angle and
    /// path loss are undefined.
    #[error("user position coincides with the base station")]
    CoincidentWithBs,

    /// Channel synthesis was asked to combine an empty set of paths.
    #[error("no path components to synthesize")]
    NoPaths,

    /// Two containers that must agree in size do not.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    /// An operation that needs at least one sample got none.
    #[error("dataset is empty")]
    EmptyDataset,

    /// Normalization statistics would divide by zero.
    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),

    /// A CSV file does not match the `x,y,p_0..p_{Q-1}` schema.
    #[error("csv schema error at line {line}: {message}")]
    CsvSchema { line: u64, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn dimension_mismatch(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
