//! Canonical tick / order-book data model, CSV ingestion, session
//! segmentation and resampling onto regular grids.
//!
//! Prices are integer multiples of the file's tick size everywhere except in
//! [`RegularSeries`], which carries real values for the fluctuation analysis.

mod book;
mod decimal;
mod resample;
mod series;
mod session;
mod ticks;

pub use book::{parse_book, write_book, BookFile, BookSnapshot, Level};
pub use decimal::TickSize;
pub use resample::resample;
pub use series::RegularSeries;
pub use session::{sessionize, DaySlice, Session, SessionHours, Sessionized};
pub use ticks::{parse_ticks, write_ticks, TickEvent, TickFile, TickKind};

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketDataError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: timestamp goes backwards")]
    NonMonotonicTime { line: usize },
    #[error("line {line}: price is not a multiple of the tick size")]
    TickSizeViolation { line: usize },
    #[error("line {line}: crossed book (best bid >= best ask)")]
    CrossedBook { line: usize },
    #[error("line {line}: price ladder out of order")]
    LadderOrderViolation { line: usize },
    #[error("line {line}: more than {depth} levels on one side")]
    DepthExceeded { line: usize, depth: usize },
    #[error("missing or malformed header: {0}")]
    BadHeader(String),
    #[error("no ticks on {0}")]
    EmptyDay(NaiveDate),
    #[error("invalid session: {0}")]
    InvalidSession(String),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MarketDataError {
    fn from(e: std::io::Error) -> Self {
        MarketDataError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MarketDataError>;

pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> MarketDataError {
    MarketDataError::MalformedRow {
        line,
        reason: reason.into(),
    }
}

/// Parses `key=value` pairs from a `# k=v k2=v2` header line.
pub(crate) fn header_fields(line: &str) -> Option<Vec<(&str, &str)>> {
    let body = line.strip_prefix('#')?;
    body.split_whitespace()
        .map(|kv| kv.split_once('='))
        .collect()
}
