use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {term}")]
    NumericalOverflow { term: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("insufficient rows: {0}")]
    Capacity(String),

    #[error("variant {0} needs base scores")]
    MissingBaseScores(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn overflow(term: impl Into<String>) -> Self {
        Error::NumericalOverflow { term: term.into() }
    }

    /// Data/schema class errors, as opposed to numerical ones.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema(_)
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::Capacity(_)
                | Error::Csv(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Dimension(_)
        )
    }
}
