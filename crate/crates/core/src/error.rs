use alloc::string::String;
use core::fmt;

/// Errors raised by the estimators and their inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A numeric precondition failed (k too large, non-positive bandwidth, ...).
    InvalidArgument(String),
    /// A split would leave one of the halves empty.
    InvalidSplit(String),
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// Non-finite entries or ragged rows in a sample set.
    InvalidSamples(String),
    NotSymmetric,
    NotPositiveDefinite(String),
    /// The PR-median of a zero-area region is undefined.
    UndefinedMedian,
    /// IoU of two zero-area regions is undefined.
    UndefinedIou,
    EmptyCurve,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::InvalidSplit(msg) => write!(f, "invalid split: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidSamples(msg) => write!(f, "invalid samples: {msg}"),
            Error::NotSymmetric => f.write_str("matrix is not symmetric"),
            Error::NotPositiveDefinite(msg) => write!(f, "matrix is not positive semi-definite: {msg}"),
            Error::UndefinedMedian => f.write_str("PR-median undefined for a zero-area region"),
            Error::UndefinedIou => f.write_str("IoU undefined: both regions have zero area"),
            Error::EmptyCurve => f.write_str("curve has no points"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
