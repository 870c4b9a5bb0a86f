use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;

use crate::corpus::{Article, IdfTable, Timestamp};
use crate::similarity::{vectorize, IndexedArticle, InvertedIndex, WeightedVector};

use super::score::{novelty, topicality, NoveltyScore, ScoreRecord, ScoringConfig};
use super::IndicatorError;

/// Articles buffered before an index update and a parallel scoring pass.
pub const DEFAULT_BATCH: usize = 4096;

struct Pending {
    article: Arc<Article>,
    keyword: String,
    vector: Arc<WeightedVector>,
    novelty: NoveltyScore,
}

/// Scores a timestamp-ordered article stream with memory bounded by the
/// active window.
///
/// Each keyword stream has its own [`InvertedIndex`]. Novelty is computed as
/// soon as an article's batch is indexed; topicality is finalized once the
/// stream has moved past `t + half_width`, so records come out in arrival
/// order but delayed by up to one half-width. Articles older than both the
/// novelty look-back and every pending topicality window are evicted.
///
/// Records are identical for every batch size and thread count.
pub struct StreamScorer {
    idf: Arc<IdfTable>,
    config: ScoringConfig,
    batch_size: usize,
    batch: Vec<Article>,
    indexes: HashMap<String, InvertedIndex>,
    pending: VecDeque<Pending>,
    latest: Option<(Timestamp, String)>,
    resident: usize,
    peak_resident: usize,
}

impl StreamScorer {
    pub fn new(idf: Arc<IdfTable>, config: ScoringConfig) -> Self {
        Self::with_batch_size(idf, config, DEFAULT_BATCH)
    }

    pub fn with_batch_size(idf: Arc<IdfTable>, config: ScoringConfig, batch_size: usize) -> Self {
        StreamScorer {
            idf,
            config,
            batch_size: batch_size.max(1),
            batch: Vec::new(),
            indexes: HashMap::new(),
            pending: VecDeque::new(),
            latest: None,
            resident: 0,
            peak_resident: 0,
        }
    }

    pub fn config(&self) -> &ScoringConfig {
        &self.config
    }

    /// Articles currently held across all keyword indexes.
    pub fn resident(&self) -> usize {
        self.resident
    }

    /// Largest value [`resident`](Self::resident) has reached.
    pub fn peak_resident(&self) -> usize {
        self.peak_resident
    }

    /// Queues one article. Articles that are not scored (STORY items, or
    /// articles without keywords) are skipped entirely.
    pub fn push(
        &mut self,
        article: Article,
        sink: &mut impl FnMut(ScoreRecord),
    ) -> Result<(), IndicatorError> {
        if let Some((last_ts, last_id)) = &self.latest {
            if article.timestamp < *last_ts {
                return Err(IndicatorError::OutOfOrder {
                    earlier_id: last_id.clone(),
                    later_id: article.id,
                });
            }
        }
        self.latest = Some((article.timestamp, article.id.clone()));
        if !article.kind.is_scored() || article.keywords.is_empty() {
            return Ok(());
        }
        self.batch.push(article);
        if self.batch.len() >= self.batch_size {
            self.flush_batch(sink);
        }
        Ok(())
    }

    /// Flushes the remaining batch and finalizes every pending article.
    pub fn finish(mut self, sink: &mut impl FnMut(ScoreRecord)) {
        self.flush_batch(sink);
        self.finalize(None, sink);
    }

    fn flush_batch(&mut self, sink: &mut impl FnMut(ScoreRecord)) {
        if self.batch.is_empty() {
            return;
        }
        let batch: Vec<Arc<Article>> = std::mem::take(&mut self.batch)
            .into_iter()
            .map(Arc::new)
            .collect();
        let idf = &self.idf;
        let vectors: Vec<Arc<WeightedVector>> = batch
            .par_iter()
            .map(|a| Arc::new(vectorize(a, idf)))
            .collect();

        let mut entries = Vec::new();
        for (article, vector) in batch.iter().zip(&vectors) {
            let mut keywords: Vec<&String> = article.keywords.iter().collect();
            keywords.sort();
            keywords.dedup();
            for keyword in keywords {
                let index = self.indexes.entry(keyword.clone()).or_default();
                index
                    .insert(IndexedArticle {
                        id: article.id.clone(),
                        agency: article.agency.clone(),
                        kind: article.kind,
                        timestamp: article.timestamp,
                        vector: Arc::clone(vector),
                    })
                    .expect("stream order checked on push");
                self.resident += 1;
                entries.push((Arc::clone(article), keyword.clone(), Arc::clone(vector)));
            }
        }
        self.peak_resident = self.peak_resident.max(self.resident);

        // the index now also holds later batch members, which the strict
        // upper bound of the novelty window excludes
        let indexes = &self.indexes;
        let config = &self.config;
        let scored: Vec<Pending> = entries
            .into_par_iter()
            .map(|(article, keyword, vector)| {
                let nov = novelty(
                    &vector,
                    article.timestamp,
                    &indexes[&keyword],
                    config.tau_millis,
                    &config.history_sources,
                );
                Pending {
                    article,
                    keyword,
                    vector,
                    novelty: nov,
                }
            })
            .collect();
        self.pending.extend(scored);

        let now = self.latest.as_ref().map(|(t, _)| *t);
        self.finalize(now, sink);
        self.evict(now.expect("batch implies a latest timestamp"));
    }

    /// Emits every pending article whose topicality window has closed, i.e.
    /// `t + half_width < now`; with `now = None`, emits everything.
    fn finalize(&mut self, now: Option<Timestamp>, sink: &mut impl FnMut(ScoreRecord)) {
        let hw = self.config.half_width_millis;
        let ready = match now {
            Some(now) => self
                .pending
                .iter()
                .take_while(|p| p.article.timestamp.plus_millis(hw) < now)
                .count(),
            None => self.pending.len(),
        };
        if ready == 0 {
            return;
        }
        let closed: Vec<Pending> = self.pending.drain(..ready).collect();
        let indexes = &self.indexes;
        let config = &self.config;
        let records: Vec<ScoreRecord> = closed
            .into_par_iter()
            .map(|p| {
                let top = topicality(
                    &p.vector,
                    &p.article.agency,
                    p.article.timestamp,
                    &indexes[&p.keyword],
                    hw,
                    config.aggregation,
                );
                ScoreRecord {
                    id: p.article.id.clone(),
                    keyword: p.keyword,
                    agency: p.article.agency.clone(),
                    kind: p.article.kind,
                    timestamp: p.article.timestamp,
                    novelty: p.novelty.score,
                    novelty_history: p.novelty.history,
                    tau_millis: config.tau_millis,
                    topicality: top.score,
                    half_width_millis: hw,
                    topicality_contributions: top.contributions,
                }
            })
            .collect();
        for r in records {
            sink(r);
        }
    }

    fn evict(&mut self, now: Timestamp) {
        // future novelty windows start after now - τ
        let novelty_floor = now.plus_millis(-self.config.tau_millis);
        // open topicality windows start at t_pending - half_width
        let topicality_floor = self
            .pending
            .front()
            .map(|p| p.article.timestamp.plus_millis(-self.config.half_width_millis));
        let mut removed = 0;
        self.indexes.retain(|_, index| {
            removed += index.evict_while(|a| {
                a.timestamp <= novelty_floor && topicality_floor.is_none_or(|f| a.timestamp < f)
            });
            !index.is_empty()
        });
        self.resident -= removed;
    }
}

/// Scores a fully materialized article slice (must be timestamp-ordered).
pub fn score_articles(
    articles: impl IntoIterator<Item = Article>,
    idf: Arc<IdfTable>,
    config: ScoringConfig,
) -> Result<Vec<ScoreRecord>, IndicatorError> {
    let mut scorer = StreamScorer::new(idf, config);
    let mut out = Vec::new();
    let mut sink = |r| out.push(r);
    for a in articles {
        scorer.push(a, &mut sink)?;
    }
    scorer.finish(&mut sink);
    Ok(out)
}
