use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveTime, TimeZone, Timelike};
use chrono_tz::America::New_York;
use serde::Deserialize;

use super::MarketError;
use crate::corpus::Timestamp;

/// Regular session length, 09:30 to 16:00 exchange time.
pub const SESSION_MINUTES: u16 = 390;
const OPEN_MINUTE_OF_DAY: u32 = 9 * 60 + 30;

/// One minute of trading for one ticker. `minute` counts from the open
/// (0 = 09:30, 389 = 15:59).
#[derive(Debug, Clone, PartialEq)]
pub struct MinuteBar {
    pub ticker: String,
    pub date: NaiveDate,
    pub minute: u16,
    /// Last trade price in the minute.
    pub price: f64,
    pub n_trades: u64,
    pub volume: u64,
}

/// A news event located on the trading clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventMinute {
    pub date: NaiveDate,
    pub minute: u16,
}

/// What to do with news timestamped outside the regular session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffHours {
    #[default]
    Drop,
    /// Pre-open news on a day maps to that day's opening minute.
    PreOpenToOpen,
}

/// `HH:MM` exchange time to session minute.
pub fn parse_session_minute(s: &str) -> Option<u16> {
    let t = NaiveTime::parse_from_str(s, "%H:%M").ok()?;
    let m = (t.hour() * 60 + t.minute()).checked_sub(OPEN_MINUTE_OF_DAY)?;
    (m < SESSION_MINUTES as u32).then_some(m as u16)
}

pub fn format_session_minute(minute: u16) -> String {
    let m = OPEN_MINUTE_OF_DAY + minute as u32;
    format!("{:02}:{:02}", m / 60, m % 60)
}

/// Maps a UTC news timestamp to the New York trading minute containing it.
pub fn align_event(ts: Timestamp, policy: OffHours) -> Option<EventMinute> {
    let utc = DateTime::from_timestamp_millis(ts.0)?;
    let local = utc.with_timezone(&New_York);
    let minute_of_day = local.hour() * 60 + local.minute();
    let date = local.date_naive();
    if minute_of_day < OPEN_MINUTE_OF_DAY {
        return match policy {
            OffHours::Drop => None,
            OffHours::PreOpenToOpen => Some(EventMinute { date, minute: 0 }),
        };
    }
    let m = minute_of_day - OPEN_MINUTE_OF_DAY;
    (m < SESSION_MINUTES as u32).then_some(EventMinute {
        date,
        minute: m as u16,
    })
}

/// UTC timestamp of the start of a session minute.
pub fn session_timestamp(date: NaiveDate, minute: u16) -> Timestamp {
    let m = OPEN_MINUTE_OF_DAY + minute as u32;
    let naive = date.and_hms_opt(m / 60, m % 60, 0).expect("valid session time");
    let local = New_York
        .from_local_datetime(&naive)
        .single()
        .expect("session times are never ambiguous");
    Timestamp(local.timestamp_millis())
}

#[derive(Debug, Deserialize)]
struct BarRow {
    ticker: String,
    date: String,
    minute: String,
    price: f64,
    n_trades: u64,
    volume: u64,
}

/// Parses minute-bar CSV (`ticker,date,minute,price,n_trades,volume`).
/// Lines starting with `#` are comments. Errors cite 1-based file lines.
pub fn read_bars<R: Read>(mut reader: R) -> Result<Vec<MinuteBar>, MarketError> {
    let mut text = Vec::new();
    reader
        .read_to_end(&mut text)
        .map_err(|e| MarketError::BarFormat { line: 0, message: e.to_string() })?;
    // the csv reader's own line count skips comment lines, so file lines are
    // recovered from byte offsets
    let mut lines = LineCounter { text: &text, offset: 0, line: 1 };
    let mut csv = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_slice());
    let headers = csv
        .headers()
        .map_err(|e| MarketError::BarFormat { line: 1, message: e.to_string() })?
        .clone();
    let expected = ["ticker", "date", "minute", "price", "n_trades", "volume"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(MarketError::BarFormat {
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut bars = Vec::new();
    let mut seen: HashMap<(String, NaiveDate, u16), u64> = HashMap::new();
    for record in csv.records() {
        let record = record.map_err(|e| MarketError::BarFormat {
            line: e.position().map(|p| lines.line_at(p.byte())).unwrap_or(0) as usize,
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| lines.line_at(p.byte())).unwrap_or(0);
        let row: BarRow = record.deserialize(Some(&headers)).map_err(|e| MarketError::BarFormat {
            line: line as usize,
            message: e.to_string(),
        })?;
        let bad = |message: String| MarketError::BarFormat { line: line as usize, message };
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d")
            .map_err(|_| bad(format!("bad date {:?}", row.date)))?;
        let minute = parse_session_minute(&row.minute)
            .ok_or_else(|| bad(format!("minute {:?} outside the 09:30-16:00 session", row.minute)))?;
        if !(row.price > 0.0) || !row.price.is_finite() {
            return Err(MarketError::NonPositivePrice { line: line as usize, price: row.price });
        }
        if let Some(first) = seen.insert((row.ticker.clone(), date, minute), line) {
            return Err(MarketError::DuplicateBar {
                first_line: first as usize,
                line: line as usize,
                ticker: row.ticker,
                date,
                minute: format_session_minute(minute),
            });
        }
        bars.push(MinuteBar {
            ticker: row.ticker,
            date,
            minute,
            price: row.price,
            n_trades: row.n_trades,
            volume: row.volume,
        });
    }
    Ok(bars)
}

struct LineCounter<'a> {
    text: &'a [u8],
    offset: usize,
    line: u64,
}

impl LineCounter<'_> {
    /// 1-based line of the record starting at `byte`; offsets must not
    /// decrease.
    fn line_at(&mut self, byte: u64) -> u64 {
        let end = (byte as usize).min(self.text.len());
        if end > self.offset {
            self.line += self.text[self.offset..end].iter().filter(|&&b| b == b'\n').count() as u64;
            self.offset = end;
        }
        // a record's reported start includes any comment lines before it
        while self.text.get(self.offset) == Some(&b'#') {
            match self.text[self.offset..].iter().position(|&b| b == b'\n') {
                Some(nl) => {
                    self.offset += nl + 1;
                    self.line += 1;
                }
                None => break,
            }
        }
        self.line
    }
}

pub fn ingest_bars(path: impl AsRef<Path>) -> Result<Vec<MinuteBar>, MarketError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| MarketError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_bars(std::io::BufReader::new(file))
}

pub fn write_bars<W: Write>(mut w: W, bars: &[MinuteBar], comment: Option<&str>) -> std::io::Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "ticker,date,minute,price,n_trades,volume")?;
    for b in bars {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            b.ticker,
            b.date.format("%Y-%m-%d"),
            format_session_minute(b.minute),
            b.price,
            b.n_trades,
            b.volume
        )?;
    }
    w.flush()
}
