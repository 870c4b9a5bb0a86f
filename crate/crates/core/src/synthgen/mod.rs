//! Seeded synthetic news and minute bars with planted structure.
//!
//! News is organised in topic clusters. Every article in a cluster carries
//! the cluster's core tokens plus tokens private to its chain member, and
//! cross-agency copies repeat their source verbatim. Because no token is
//! shared across clusters, every expected novelty and topicality score
//! follows in closed form from the ledger (see [`expected_scores`]).
//!
//! All randomness comes from ChaCha8 seeded with `SynthSpec::seed`; each
//! generator uses its own stream (news 1, bars 2, similarity curve 3,
//! random corpus 4, event times 5), so the outputs are independent and each
//! is reproducible on its own.

mod bars;
mod curve;
mod news;

pub use bars::{gen_bars, gen_event_times, impulse};
pub use curve::{gen_similarity_curve, random_corpus};
pub use news::{
    agency_name, expected_scores, gen_news, keyword_name, read_ledger, write_ledger, ExpectedScore,
    LedgerEntry, NewsStream,
};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub(crate) const STREAM_NEWS: u64 = 1;
pub(crate) const STREAM_BARS: u64 = 2;
pub(crate) const STREAM_CURVE: u64 = 3;
pub(crate) const STREAM_CORPUS: u64 = 4;
pub(crate) const STREAM_EVENTS: u64 = 5;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator parameters. Every field has a default, so a spec can be
/// written with only the fields that differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    /// First calendar day; weekends are skipped.
    pub start_date: NaiveDate,
    /// Trading days covered by news and bars.
    pub n_days: u32,
    pub n_agencies: usize,
    pub n_keywords: usize,
    /// Zipf exponent of keyword popularity across clusters.
    pub keyword_zipf: f64,
    /// Vocabulary of [`random_corpus`].
    pub vocab_size: usize,
    pub vocab_zipf: f64,
    /// Mean topic clusters started per trading day.
    pub cluster_rate: f64,
    pub tokens_per_article: usize,
    /// Fraction of each article's tokens shared by its whole cluster.
    pub overlap: f64,
    /// Mean follow-up chain length (geometric, at least 1).
    pub chain_mean: f64,
    pub chain_max: usize,
    /// Mean gap between chain members, minutes (exponential).
    pub followup_gap_min: f64,
    /// Probability a chain member is an ALERT rather than a HEADLINE.
    pub alert_fraction: f64,
    /// Probability each other agency copies a chain member.
    pub copy_prob: f64,
    /// Copy probability for HEADLINE members when it differs from
    /// `copy_prob`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub headline_copy_prob: Option<f64>,
    /// Copies lag their source by a uniform delay in `[0, copy_lag_max_min]`.
    pub copy_lag_max_min: f64,
    /// Intraday U-curve: activity at the open and close is `1 + u_amplitude`
    /// times the midday level.
    pub u_amplitude: f64,
    /// Log-normal sigma of the per-date activity factor.
    pub date_sigma: f64,
    /// Log-normal sigma of the per-minute multiplicative noise.
    pub noise_sigma: f64,
    pub base_volatility: f64,
    pub base_trades: f64,
    pub base_volume: f64,
    pub start_price: f64,
    /// Planted response `A·exp(-λ·Δt) + c` after each event.
    pub impulse_amplitude: f64,
    pub impulse_rate: f64,
    pub impulse_offset: f64,
    /// Planted auto-similarity decay `S(Δt) ∝ Δt^exponent` beyond 100 min.
    pub sa_exponent: f64,
    pub sa_plateau: f64,
    pub sa_noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 1,
            start_date: NaiveDate::from_ymd_opt(2014, 1, 6).expect("valid date"),
            n_days: 20,
            n_agencies: 6,
            n_keywords: 5,
            keyword_zipf: 1.0,
            vocab_size: 5000,
            vocab_zipf: 1.1,
            cluster_rate: 20.0,
            tokens_per_article: 8,
            overlap: 0.5,
            chain_mean: 3.0,
            chain_max: 20,
            followup_gap_min: 60.0,
            alert_fraction: 0.5,
            copy_prob: 0.5,
            headline_copy_prob: None,
            copy_lag_max_min: 10.0,
            u_amplitude: 1.0,
            date_sigma: 0.2,
            noise_sigma: 0.05,
            base_volatility: 5e-4,
            base_trades: 200.0,
            base_volume: 20_000.0,
            start_price: 50.0,
            impulse_amplitude: 0.45,
            impulse_rate: 0.073,
            impulse_offset: 1.0,
            sa_exponent: -0.35,
            sa_plateau: 0.3,
            sa_noise: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("ledger does not match the article stream: {0}")]
    LedgerMismatch(String),
}

const MAX_AGENCIES: usize = 64;

impl SynthSpec {
    /// Number of cluster-wide tokens per article.
    pub fn core_tokens(&self) -> usize {
        (self.overlap * self.tokens_per_article as f64).round() as usize
    }

    /// Number of member-private tokens per article.
    pub fn own_tokens(&self) -> usize {
        self.tokens_per_article - self.core_tokens()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::InvalidSpec(m));
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SynthError::InvalidSpec(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        prob("overlap", self.overlap)?;
        prob("alert_fraction", self.alert_fraction)?;
        prob("copy_prob", self.copy_prob)?;
        if let Some(p) = self.headline_copy_prob {
            prob("headline_copy_prob", p)?;
        }
        let positive = [
            ("keyword_zipf", self.keyword_zipf),
            ("vocab_zipf", self.vocab_zipf),
            ("cluster_rate", self.cluster_rate),
            ("followup_gap_min", self.followup_gap_min),
            ("base_volatility", self.base_volatility),
            ("base_trades", self.base_trades),
            ("base_volume", self.base_volume),
            ("start_price", self.start_price),
            ("sa_plateau", self.sa_plateau),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        let non_negative = [
            ("copy_lag_max_min", self.copy_lag_max_min),
            ("u_amplitude", self.u_amplitude),
            ("date_sigma", self.date_sigma),
            ("noise_sigma", self.noise_sigma),
            ("impulse_rate", self.impulse_rate),
            ("sa_noise", self.sa_noise),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.impulse_amplitude.is_finite() && self.impulse_offset.is_finite() && self.sa_exponent.is_finite()) {
            return fail("impulse and decay parameters must be finite".into());
        }
        if self.impulse_offset + self.impulse_amplitude.min(0.0) <= 0.0 {
            return fail("planted response must stay positive".into());
        }
        if !(1..=MAX_AGENCIES).contains(&self.n_agencies) {
            return fail(format!("n_agencies must lie in [1, {MAX_AGENCIES}], got {}", self.n_agencies));
        }
        if self.n_keywords == 0 || self.vocab_size == 0 || self.tokens_per_article == 0 {
            return fail("n_keywords, vocab_size and tokens_per_article must be at least 1".into());
        }
        if self.n_days == 0 {
            return fail("n_days must be at least 1".into());
        }
        if !(self.chain_mean >= 1.0 && self.chain_mean.is_finite()) || self.chain_max == 0 {
            return fail(format!("chain_mean must be >= 1 and chain_max >= 1, got {} and {}", self.chain_mean, self.chain_max));
        }
        Ok(())
    }

    /// Trading days of the synthetic calendar.
    pub fn calendar(&self) -> Vec<NaiveDate> {
        trading_days(self.start_date, self.n_days as usize)
    }
}

/// The first `n` weekdays on or after `start`.
pub fn trading_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}
