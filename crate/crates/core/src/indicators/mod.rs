//! Per-article novelty and topicality scores and their high/low labels.
//!
//! Novelty sums an article's cosine similarity to everything published on
//! the same keyword in the preceding `τ` (one week by default); a value near
//! zero marks genuinely new information. Topicality sums, over every *other*
//! agency, the best similarity among that agency's articles within ±30
//! minutes; a large value marks a story carried simultaneously across
//! agencies.

mod classify;
mod score;
mod stream;

use std::io::Write;

pub use classify::{classify, classify_by_keyword, Labels, Level, NoveltyReading};
pub use score::{
    novelty, topicality, NoveltyScore, ScoreRecord, ScoringConfig, SourceFilter, TopAggregation,
    TopicalityScore, WEEK_MILLIS,
};
pub use stream::{score_articles, StreamScorer, DEFAULT_BATCH};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndicatorError {
    #[error("article {later_id} arrived after later-timestamped article {earlier_id}")]
    OutOfOrder { earlier_id: String, later_id: String },
    #[error("no scores to classify")]
    EmptyScores,
}

/// Header of the scores CSV.
pub const SCORES_HEADER: &str = "id,keyword,agency,kind,ts,novelty,topicality,nov_label,top_label";

/// Writes scores with their labels as CSV (`labels` aligned with `scores`).
pub fn write_scores_csv<W: Write>(
    mut w: W,
    scores: &[ScoreRecord],
    labels: &[Labels],
    comment: Option<&str>,
) -> std::io::Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(SCORES_HEADER.split(','))?;
    for (s, l) in scores.iter().zip(labels) {
        csv.write_record([
            s.id.clone(),
            s.keyword.clone(),
            s.agency.to_string(),
            s.kind.to_string(),
            s.timestamp.to_string(),
            s.novelty.to_string(),
            s.topicality.to_string(),
            l.novelty.to_string(),
            l.topicality.to_string(),
        ])?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()
}
