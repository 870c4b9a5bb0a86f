use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;

use super::bars::{MinuteBar, SESSION_MINUTES};
use super::MarketError;

const SESSION: usize = SESSION_MINUTES as usize;

/// Market activity measure derived from minute bars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    /// Absolute one-minute log return of the last trade price.
    Volatility,
    Trades,
    Volume,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Volatility, Measure::Trades, Measure::Volume];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Volatility => "volatility",
            Measure::Trades => "n_trades",
            Measure::Volume => "volume",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Measure::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown measure {s:?}"))
    }
}

/// One ticker's per-date, per-session-minute values. `None` is a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub ticker: String,
    pub measure: Measure,
    pub days: BTreeMap<NaiveDate, Vec<Option<f64>>>,
}

/// `|ln P(t+1) - ln P(t)|` for one session. The last minute, and any minute
/// whose successor (or itself) is missing, is a gap.
pub fn volatility(prices: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut out = vec![None; prices.len()];
    for t in 0..prices.len().saturating_sub(1) {
        if let (Some(p0), Some(p1)) = (prices[t], prices[t + 1]) {
            out[t] = Some((p1.ln() - p0.ln()).abs());
        }
    }
    out
}

/// Builds the raw series of `measure` for `ticker`. Missing bars are gaps.
pub fn raw_series(bars: &[MinuteBar], ticker: &str, measure: Measure) -> RawSeries {
    let mut days: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    for b in bars.iter().filter(|b| b.ticker == ticker) {
        let value = match measure {
            Measure::Volatility => b.price,
            Measure::Trades => b.n_trades as f64,
            Measure::Volume => b.volume as f64,
        };
        days.entry(b.date).or_insert_with(|| vec![None; SESSION])[b.minute as usize] = Some(value);
    }
    if measure == Measure::Volatility {
        for values in days.values_mut() {
            *values = volatility(values);
        }
    }
    RawSeries {
        ticker: ticker.to_string(),
        measure,
        days,
    }
}

/// Per-date and per-minute means used by the two normalization stages.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalizationReport {
    /// Mean raw value of each retained date.
    pub date_means: BTreeMap<NaiveDate, f64>,
    /// Across-date mean of stage-1 values per session minute; `None` where
    /// no date has data or the mean is zero.
    pub minute_means: Vec<Option<f64>>,
    /// Dates dropped because their mean was zero or they had no data.
    pub dropped: Vec<NaiveDate>,
}

/// Doubly normalized activity: each value divided by its date mean, then by
/// the across-date mean at the same minute of the session.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivitySeries {
    pub ticker: String,
    pub measure: Measure,
    /// Values after dividing by the date mean.
    pub stage1: BTreeMap<NaiveDate, Vec<Option<f64>>>,
    /// Fully normalized values.
    pub values: BTreeMap<NaiveDate, Vec<Option<f64>>>,
    pub report: NormalizationReport,
}

impl ActivitySeries {
    pub fn get(&self, date: NaiveDate, minute: u16) -> Option<f64> {
        self.values.get(&date)?.get(minute as usize).copied().flatten()
    }

    /// Dates retained after normalization.
    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.values.keys().copied()
    }
}

fn mean_present(values: &[Option<f64>]) -> Option<f64> {
    let (sum, n) = values
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn normalize(raw: &RawSeries) -> Result<ActivitySeries, MarketError> {
    if raw.days.len() < 2 {
        return Err(MarketError::TooFewDates {
            ticker: raw.ticker.clone(),
            retained: raw.days.len(),
        });
    }
    let mut report = NormalizationReport::default();
    let mut stage1 = BTreeMap::new();
    for (&date, values) in &raw.days {
        match mean_present(values) {
            Some(mean) if mean > 0.0 => {
                report.date_means.insert(date, mean);
                stage1.insert(date, values.iter().map(|v| v.map(|v| v / mean)).collect::<Vec<_>>());
            }
            _ => {
                log::warn!("{} {}: dropping {date}, zero mean activity", raw.ticker, raw.measure);
                report.dropped.push(date);
            }
        }
    }
    if stage1.len() < 2 {
        return Err(MarketError::TooFewDates {
            ticker: raw.ticker.clone(),
            retained: stage1.len(),
        });
    }

    let mut sums = vec![0.0; SESSION];
    let mut counts = vec![0usize; SESSION];
    for values in stage1.values() {
        for (t, v) in values.iter().enumerate() {
            if let Some(v) = v {
                sums[t] += v;
                counts[t] += 1;
            }
        }
    }
    report.minute_means = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| (n > 0 && s > 0.0).then(|| s / n as f64))
        .collect();

    let values = stage1
        .iter()
        .map(|(&date, day): (&NaiveDate, &Vec<Option<f64>>)| {
            let normalized = day
                .iter()
                .zip(&report.minute_means)
                .map(|(v, m)| match (v, m) {
                    (Some(v), Some(m)) => Some(v / m),
                    _ => None,
                })
                .collect();
            (date, normalized)
        })
        .collect();

    Ok(ActivitySeries {
        ticker: raw.ticker.clone(),
        measure: raw.measure,
        stage1,
        values,
        report,
    })
}
