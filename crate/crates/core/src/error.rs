use thiserror::Error;

/// Errors produced by the pavecheck library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value or record violated a domain invariant.
    #[error("rejected input: {0}")]
    InvalidInput(String),

    /// A text input could not be parsed. `row` is the 1-based data row
    /// (the header is row 0).
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("no samples")]
    NoSamples,

    #[error("degenerate x: all predictor values are equal")]
    DegenerateX,

    #[error("non-physical slope {0}: IRI must increase with RMS")]
    NonPhysicalSlope(f64),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(row: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            row,
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
