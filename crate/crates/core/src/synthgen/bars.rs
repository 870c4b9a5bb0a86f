use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{rng_for, SynthError, SynthSpec, STREAM_BARS, STREAM_EVENTS};
use crate::corpus::Timestamp;
use crate::market::{align_event, session_timestamp, MinuteBar, OffHours, SESSION_MINUTES};

/// Planted response multiplier `Δt` minutes after an event.
pub fn impulse(spec: &SynthSpec, dt: f64) -> f64 {
    spec.impulse_amplitude * (-spec.impulse_rate * dt).exp() + spec.impulse_offset
}

fn u_curve(spec: &SynthSpec, minute: u16) -> f64 {
    let mid = (SESSION_MINUTES - 1) as f64 / 2.0;
    let x = (minute as f64 - mid) / mid;
    1.0 + spec.u_amplitude * x * x
}

/// Stable per-ticker stream offset, so each ticker's bars are independent.
fn ticker_stream(ticker: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in ticker.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    STREAM_BARS | (h << 8)
}

fn lognormal_factor(rng: &mut impl Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (sigma * z - sigma * sigma / 2.0).exp()
}

/// Minute bars for `ticker` over the spec's calendar.
///
/// Expected activity at each minute is the intraday U-curve times a
/// log-normal date factor times `1 + Σ (A·exp(-λΔt) + c - 1)` over the
/// day's earlier events, times unit-mean log-normal noise. Volatility
/// carries it exactly: each one-minute log return has magnitude
/// `base_volatility × activity` and a random sign. Trade counts and volume
/// use independent noise draws and are rounded to integers.
///
/// Events outside the session are ignored; events in the same minute plant
/// one response.
pub fn gen_bars(spec: &SynthSpec, ticker: &str, events: &[Timestamp]) -> Result<Vec<MinuteBar>, SynthError> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, ticker_stream(ticker));
    let mut by_date: BTreeMap<_, BTreeSet<u16>> = BTreeMap::new();
    for &e in events {
        if let Some(m) = align_event(e, OffHours::Drop) {
            by_date.entry(m.date).or_default().insert(m.minute);
        }
    }
    let calendar = spec.calendar();
    let mut bars = Vec::with_capacity(calendar.len() * SESSION_MINUTES as usize);
    let mut price = spec.start_price;
    for date in calendar {
        let factor = lognormal_factor(&mut rng, spec.date_sigma);
        let day_events: Vec<u16> = by_date.get(&date).map(|s| s.iter().copied().collect()).unwrap_or_default();
        for minute in 0..SESSION_MINUTES {
            let response: f64 = day_events
                .iter()
                .filter(|&&e| e <= minute)
                .map(|&e| impulse(spec, (minute - e) as f64) - 1.0)
                .sum();
            let expected = factor * u_curve(spec, minute) * (1.0 + response);
            let volatility = spec.base_volatility * expected * lognormal_factor(&mut rng, spec.noise_sigma);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let trades = spec.base_trades * expected * lognormal_factor(&mut rng, spec.noise_sigma);
            let volume = spec.base_volume * expected * lognormal_factor(&mut rng, spec.noise_sigma);
            bars.push(MinuteBar {
                ticker: ticker.to_string(),
                date,
                minute,
                price,
                n_trades: trades.round() as u64,
                volume: volume.round() as u64,
            });
            // the return from this minute to the next carries this minute's activity
            price *= (sign * volatility).exp();
        }
    }
    Ok(bars)
}

/// `n` event timestamps at uniformly random session minutes of the spec's
/// calendar, sorted.
pub fn gen_event_times(spec: &SynthSpec, n: usize) -> Vec<Timestamp> {
    let mut rng = rng_for(spec.seed, STREAM_EVENTS);
    let calendar = spec.calendar();
    let mut out: Vec<Timestamp> = (0..n)
        .map(|_| {
            let date = calendar[rng.random_range(0..calendar.len())];
            let minute = rng.random_range(0..SESSION_MINUTES);
            session_timestamp(date, minute).plus_millis(rng.random_range(0..60_000))
        })
        .collect();
    out.sort();
    out
}
