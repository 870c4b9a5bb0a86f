//! Minute-bar market data, doubly normalized activity series, event-aligned
//! response curves and the curve fits used to summarize them.
//!
//! Activity is normalized by dividing each minute's value by its date mean
//! and then by the across-date mean at the same minute of the session, so a
//! response curve of 1 means "ordinary activity for that time of day".

mod activity;
mod bars;
mod event;
mod fit;

pub use activity::{normalize, raw_series, volatility, ActivitySeries, Measure, NormalizationReport, RawSeries};
pub use bars::{
    align_event, format_session_minute, ingest_bars, parse_session_minute, read_bars, session_timestamp,
    write_bars, EventMinute, MinuteBar, OffHours, SESSION_MINUTES,
};
pub use event::{event_study, window_mean, window_stats, ResponseCurve, WindowStats, DEFAULT_LAGS};
pub use fit::{fit_exponential, fit_power_law, ExpFit, FitError, PowerFit, MIN_FIT_POINTS, POWER_LAW_RANGE};

use chrono::NaiveDate;

#[derive(Debug, thiserror::Error)]
pub enum MarketError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bars line {line}: {message}")]
    BarFormat { line: usize, message: String },
    #[error("bars line {line}: price {price} is not positive")]
    NonPositivePrice { line: usize, price: f64 },
    #[error("bars line {line}: duplicate bar {ticker} {date} {minute}, first seen on line {first_line}")]
    DuplicateBar {
        first_line: usize,
        line: usize,
        ticker: String,
        date: NaiveDate,
        minute: String,
    },
    #[error("{ticker}: normalization needs at least 2 dates with activity, found {retained}")]
    TooFewDates { ticker: String, retained: usize },
    #[error("no usable events")]
    NoUsableEvents,
    #[error("no data in lag window [{lo}, {hi})")]
    EmptyWindow { lo: i32, hi: i32 },
}
