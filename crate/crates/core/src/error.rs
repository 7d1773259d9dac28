use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad class of a failure, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data or an unusable request (malformed CSV, empty window).
    Input,
    /// The numerics failed (degenerate basis, no usable fit).
    Numerical,
    /// Filesystem failure while writing artifacts.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {message}")]
    MalformedRecord { row: usize, message: String },

    #[error("missing column {0:?} in header")]
    MissingColumn(String),

    #[error("row {row}: non-positive price {price} on {date}")]
    NonPositivePrice {
        row: usize,
        date: NaiveDate,
        price: f64,
    },

    #[error("row {row}: duplicate date {date}")]
    DuplicateDate { row: usize, date: NaiveDate },

    #[error("series needs at least 2 valid rows, found {0}")]
    TooFewRows(usize),

    #[error("invalid date range: start {start} is not before end {end}")]
    InvalidRange { start: NaiveDate, end: NaiveDate },

    #[error("window {start}..={end} has {found} observations, at least {required} required")]
    WindowTooShort {
        start: NaiveDate,
        end: NaiveDate,
        found: usize,
        required: usize,
    },

    #[error(
        "window {index} ({start}..={end}) has {found} observations, at least {required} required"
    )]
    WindowUnderrun {
        index: usize,
        start: NaiveDate,
        end: NaiveDate,
        found: usize,
        required: usize,
    },

    #[error("time {0} maps outside the representable calendar range")]
    TimeOutOfRange(f64),

    #[error("t = {t} is not before the critical time tc = {tc}")]
    Domain { t: f64, tc: f64 },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate linear basis at tc = {tc}, m = {m}, omega = {omega}")]
    DegenerateBasis { tc: f64, m: f64, omega: f64 },

    #[error("every grid node produced a degenerate linear basis")]
    AllNodesDegenerate,

    #[error("{successful} successful fits, at least {required} needed for crash windows")]
    TooFewFits { successful: usize, required: usize },

    #[error("empty list of critical dates")]
    EmptyDates,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DegenerateBasis { .. }
            | Error::AllNodesDegenerate
            | Error::TooFewFits { .. }
            | Error::Domain { .. } => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Input,
        }
    }
}
