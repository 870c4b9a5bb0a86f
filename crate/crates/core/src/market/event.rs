use std::collections::BTreeSet;
use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;

use super::activity::ActivitySeries;
use super::bars::{EventMinute, SESSION_MINUTES};
use super::MarketError;

pub const DEFAULT_LAGS: RangeInclusive<i32> = -30..=90;

/// Mean normalized activity at each lag around a set of events.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    pub lags: Vec<i32>,
    /// `None` where no event contributed a value.
    pub mean: Vec<Option<f64>>,
    /// Events contributing at each lag; lower near session edges and gaps.
    pub events: Vec<usize>,
    /// Distinct usable events.
    pub n_events: usize,
}

impl ResponseCurve {
    pub fn at(&self, lag: i32) -> Option<f64> {
        let i = self.lags.iter().position(|&l| l == lag)?;
        self.mean[i]
    }

    pub fn write_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "lag_min,mean,events")?;
        for ((lag, mean), n) in self.lags.iter().zip(&self.mean).zip(&self.events) {
            match mean {
                Some(m) => writeln!(w, "{lag},{m},{n}")?,
                None => writeln!(w, "{lag},,{n}")?,
            }
        }
        w.flush()
    }
}

/// Per-lag sums over a fixed slice of events.
fn accumulate(activity: &ActivitySeries, events: &[EventMinute], lags: &[i32]) -> (Vec<f64>, Vec<usize>) {
    let mut sums = vec![0.0; lags.len()];
    let mut counts = vec![0; lags.len()];
    for e in events {
        for (i, &lag) in lags.iter().enumerate() {
            let m = e.minute as i32 + lag;
            if (0..SESSION_MINUTES as i32).contains(&m) {
                if let Some(v) = activity.get(e.date, m as u16) {
                    sums[i] += v;
                    counts[i] += 1;
                }
            }
        }
    }
    (sums, counts)
}

const EVENT_CHUNK: usize = 256;

/// Averages normalized activity around each event. Events in the same
/// minute count once; events on dates absent from `activity` are unusable.
/// A lag that falls outside the event's session is skipped for that event.
pub fn event_study(
    activity: &ActivitySeries,
    events: &[EventMinute],
    lags: RangeInclusive<i32>,
) -> Result<ResponseCurve, MarketError> {
    let usable: Vec<EventMinute> = events
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|e| activity.values.contains_key(&e.date))
        .collect();
    if usable.is_empty() {
        return Err(MarketError::NoUsableEvents);
    }
    let lags: Vec<i32> = lags.collect();
    // fixed chunks merged in order keep the float sums independent of threads
    let parts: Vec<(Vec<f64>, Vec<usize>)> = usable
        .par_chunks(EVENT_CHUNK)
        .map(|chunk| accumulate(activity, chunk, &lags))
        .collect();
    let mut sums = vec![0.0; lags.len()];
    let mut counts = vec![0; lags.len()];
    for (s, c) in parts {
        for i in 0..lags.len() {
            sums[i] += s[i];
            counts[i] += c[i];
        }
    }
    let mean = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
        .collect();
    Ok(ResponseCurve {
        lags,
        mean,
        events: counts,
        n_events: usable.len(),
    })
}

/// Event-count-weighted mean of the curve over lags in `[lo, hi)`.
pub fn window_mean(curve: &ResponseCurve, lo: i32, hi: i32) -> Result<f64, MarketError> {
    let (mut sum, mut n) = (0.0, 0usize);
    for ((&lag, mean), &count) in curve.lags.iter().zip(&curve.mean).zip(&curve.events) {
        if (lo..hi).contains(&lag) {
            if let Some(m) = mean {
                sum += m * count as f64;
                n += count;
            }
        }
    }
    if n == 0 {
        return Err(MarketError::EmptyWindow { lo, hi });
    }
    Ok(sum / n as f64)
}

/// Window mean with its standard error from per-event dispersion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    /// Mean over all (event, lag) values in the window; equals
    /// [`window_mean`] of the corresponding curve.
    pub mean: f64,
    /// Standard error: sample standard deviation of per-event window
    /// averages over the square root of the event count.
    pub std_error: f64,
    /// Events with at least one value in the window.
    pub events: usize,
}

pub fn window_stats(
    activity: &ActivitySeries,
    events: &[EventMinute],
    lo: i32,
    hi: i32,
) -> Result<WindowStats, MarketError> {
    let usable: BTreeSet<EventMinute> = events.iter().copied().collect();
    let lags: Vec<i32> = (lo..hi).collect();
    let (mut total, mut values) = (0.0, 0usize);
    let mut per_event = Vec::new();
    for e in &usable {
        let (sums, counts) = accumulate(activity, std::slice::from_ref(e), &lags);
        let (s, n): (f64, usize) = (sums.iter().sum(), counts.iter().sum());
        if n > 0 {
            total += s;
            values += n;
            per_event.push(s / n as f64);
        }
    }
    if per_event.is_empty() {
        return Err(MarketError::EmptyWindow { lo, hi });
    }
    let k = per_event.len() as f64;
    let m = per_event.iter().sum::<f64>() / k;
    let var = if per_event.len() > 1 {
        per_event.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(WindowStats {
        mean: total / values as f64,
        std_error: (var / k).sqrt(),
        events: per_event.len(),
    })
}
