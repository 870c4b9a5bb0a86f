use std::collections::{BTreeMap, BTreeSet};
use std::ops::Bound;

use crate::corpus::{Agency, Kind, Timestamp, MILLIS_PER_MINUTE};
use crate::similarity::{InvertedIndex, WeightedVector};

pub const WEEK_MILLIS: i64 = 7 * 24 * 60 * MILLIS_PER_MINUTE;

/// How per-article similarities to other agencies combine into topicality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TopAggregation {
    /// Best match per other agency, summed over agencies.
    #[default]
    Max,
    /// Every other-agency article in the window, summed.
    Sum,
}

/// Which agencies' articles form the novelty history.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SourceFilter {
    #[default]
    All,
    Only(BTreeSet<Agency>),
}

impl SourceFilter {
    pub fn allows(&self, agency: &Agency) -> bool {
        match self {
            SourceFilter::All => true,
            SourceFilter::Only(set) => set.contains(agency),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringConfig {
    /// Novelty look-back τ in milliseconds.
    pub tau_millis: i64,
    /// Topicality half-width in milliseconds.
    pub half_width_millis: i64,
    pub aggregation: TopAggregation,
    pub history_sources: SourceFilter,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            tau_millis: WEEK_MILLIS,
            half_width_millis: 30 * MILLIS_PER_MINUTE,
            aggregation: TopAggregation::Max,
            history_sources: SourceFilter::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoveltyScore {
    /// Sum of similarities to strictly earlier articles within τ.
    pub score: f64,
    /// Articles in the history window, similar or not.
    pub history: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopicalityScore {
    pub score: f64,
    /// Contribution of each other agency with a nonzero match.
    pub contributions: BTreeMap<Agency, f64>,
}

/// Novelty of a vector published at `at`: the summed cosine similarity to
/// indexed articles with `at - τ < t < at`. Zero means nothing similar was
/// seen in the look-back window; larger means less novel.
pub fn novelty(
    query: &WeightedVector,
    at: Timestamp,
    index: &InvertedIndex,
    tau_millis: i64,
    sources: &SourceFilter,
) -> NoveltyScore {
    let range = (
        Bound::Excluded(at.plus_millis(-tau_millis)),
        Bound::Excluded(at),
    );
    let history = match sources {
        SourceFilter::All => {
            let seqs = index.seqs_in(range);
            (seqs.end - seqs.start) as usize
        }
        SourceFilter::Only(_) => index
            .seqs_in(range)
            .filter(|&s| sources.allows(&index.get(s).unwrap().agency))
            .count(),
    };
    let mut score = 0.0;
    for m in index.similarities(query, range) {
        if sources.allows(&index.get(m.seq).unwrap().agency) {
            score += m.similarity;
        }
    }
    NoveltyScore { score, history }
}

/// Topicality of a vector published by `agency` at `at`: similarity to
/// articles from other agencies within `at ± half_width`, combined per
/// `aggregation`.
pub fn topicality(
    query: &WeightedVector,
    agency: &Agency,
    at: Timestamp,
    index: &InvertedIndex,
    half_width_millis: i64,
    aggregation: TopAggregation,
) -> TopicalityScore {
    let range = at.plus_millis(-half_width_millis)..=at.plus_millis(half_width_millis);
    let mut contributions: BTreeMap<Agency, f64> = BTreeMap::new();
    for m in index.similarities(query, range) {
        let other = &index.get(m.seq).unwrap().agency;
        if other == agency {
            continue;
        }
        match contributions.get_mut(other) {
            Some(c) => match aggregation {
                TopAggregation::Max => *c = c.max(m.similarity),
                TopAggregation::Sum => *c += m.similarity,
            },
            None => {
                contributions.insert(other.clone(), m.similarity);
            }
        }
    }
    let score = contributions.values().sum();
    TopicalityScore {
        score,
        contributions,
    }
}

/// Novelty and topicality of one article within one keyword stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub id: String,
    pub keyword: String,
    pub agency: Agency,
    pub kind: Kind,
    pub timestamp: Timestamp,
    pub novelty: f64,
    pub novelty_history: usize,
    pub tau_millis: i64,
    pub topicality: f64,
    pub half_width_millis: i64,
    pub topicality_contributions: BTreeMap<Agency, f64>,
}
