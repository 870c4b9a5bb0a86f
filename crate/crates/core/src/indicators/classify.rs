use std::collections::HashMap;
use std::fmt;

use super::{IndicatorError, ScoreRecord};

/// Raw score position relative to the stream mean: `High` iff score ≥ mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    High,
    Low,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::High => "high",
            Level::Low => "low",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Plain-language reading of a novelty level. A high raw novelty score means
/// many similar earlier articles, so the article is *stale*.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoveltyReading {
    Novel,
    Stale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Labels {
    pub novelty: Level,
    pub novelty_reading: NoveltyReading,
    pub topicality: Level,
}

fn mean_clamped(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        sum += v;
        n += 1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    // the true mean lies in [min, max]; clamping removes rounding drift so a
    // constant list labels every element high
    (sum / n as f64).clamp(lo, hi)
}

fn level(score: f64, mean: f64) -> Level {
    if score >= mean {
        Level::High
    } else {
        Level::Low
    }
}

/// Labels each record against the means of one keyword stream.
pub fn classify(scores: &[ScoreRecord]) -> Result<Vec<Labels>, IndicatorError> {
    if scores.is_empty() {
        return Err(IndicatorError::EmptyScores);
    }
    let nov_mean = mean_clamped(scores.iter().map(|s| s.novelty));
    let top_mean = mean_clamped(scores.iter().map(|s| s.topicality));
    Ok(scores
        .iter()
        .map(|s| {
            let novelty = level(s.novelty, nov_mean);
            Labels {
                novelty,
                novelty_reading: match novelty {
                    Level::High => NoveltyReading::Stale,
                    Level::Low => NoveltyReading::Novel,
                },
                topicality: level(s.topicality, top_mean),
            }
        })
        .collect())
}

/// [`classify`] applied separately to each keyword's records; output is
/// aligned with the input order.
pub fn classify_by_keyword(scores: &[ScoreRecord]) -> Result<Vec<Labels>, IndicatorError> {
    if scores.is_empty() {
        return Err(IndicatorError::EmptyScores);
    }
    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, s) in scores.iter().enumerate() {
        groups.entry(s.keyword.as_str()).or_default().push(i);
    }
    let mut out = vec![None; scores.len()];
    for idx in groups.values() {
        let group: Vec<ScoreRecord> = idx.iter().map(|&i| scores[i].clone()).collect();
        for (&i, labels) in idx.iter().zip(classify(&group)?) {
            out[i] = Some(labels);
        }
    }
    Ok(out.into_iter().map(|l| l.expect("every record grouped")).collect())
}
