use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use std::ops::{Bound, RangeBounds};
use std::sync::Arc;

use crate::corpus::{Agency, Kind, Timestamp, TokenId};

use super::vector::{cosine_from_dot, WeightedVector};

/// An article as held by the index.
#[derive(Debug, Clone)]
pub struct IndexedArticle {
    pub id: String,
    pub agency: Agency,
    pub kind: Kind,
    pub timestamp: Timestamp,
    pub vector: Arc<WeightedVector>,
}

#[derive(Debug, Clone, Copy)]
struct Posting {
    timestamp: Timestamp,
    seq: u64,
    weight: f64,
}

/// Time-ordered inverted index over weighted article vectors.
///
/// Articles are appended in timestamp order and receive consecutive sequence
/// numbers. The oldest articles can be evicted from the front, which keeps
/// memory proportional to the active window in streaming use.
#[derive(Debug, Default)]
pub struct InvertedIndex {
    base_seq: u64,
    articles: VecDeque<IndexedArticle>,
    postings: HashMap<TokenId, VecDeque<Posting>>,
}

/// A stored article with nonzero similarity to a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub seq: u64,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("article {id} at {timestamp} inserted after an article at {last}")]
pub struct OutOfOrderInsert {
    pub id: String,
    pub timestamp: Timestamp,
    pub last: Timestamp,
}

fn lower_ok(bound: Bound<&Timestamp>, ts: Timestamp) -> bool {
    match bound {
        Bound::Included(b) => ts >= *b,
        Bound::Excluded(b) => ts > *b,
        Bound::Unbounded => true,
    }
}

fn upper_ok(bound: Bound<&Timestamp>, ts: Timestamp) -> bool {
    match bound {
        Bound::Included(b) => ts <= *b,
        Bound::Excluded(b) => ts < *b,
        Bound::Unbounded => true,
    }
}

impl InvertedIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an index from articles in any order (stable by timestamp).
    pub fn from_articles(articles: impl IntoIterator<Item = IndexedArticle>) -> Self {
        let mut all: Vec<IndexedArticle> = articles.into_iter().collect();
        all.sort_by_key(|a| a.timestamp);
        let mut index = Self::new();
        for a in all {
            index.insert(a).expect("sorted input");
        }
        index
    }

    pub fn insert(&mut self, article: IndexedArticle) -> Result<u64, OutOfOrderInsert> {
        if let Some(last) = self.articles.back() {
            if article.timestamp < last.timestamp {
                return Err(OutOfOrderInsert {
                    id: article.id,
                    timestamp: article.timestamp,
                    last: last.timestamp,
                });
            }
        }
        let seq = self.base_seq + self.articles.len() as u64;
        for &(token, weight) in article.vector.entries() {
            self.postings.entry(token).or_default().push_back(Posting {
                timestamp: article.timestamp,
                seq,
                weight,
            });
        }
        self.articles.push_back(article);
        Ok(seq)
    }

    /// Removes articles from the front while `evict` returns true.
    pub fn evict_while(&mut self, mut evict: impl FnMut(&IndexedArticle) -> bool) -> usize {
        let mut removed = 0;
        while let Some(front) = self.articles.front() {
            if !evict(front) {
                break;
            }
            let front = self.articles.pop_front().unwrap();
            for &(token, _) in front.vector.entries() {
                if let Entry::Occupied(mut list) = self.postings.entry(token) {
                    let popped = list.get_mut().pop_front();
                    debug_assert_eq!(popped.map(|p| p.seq), Some(self.base_seq));
                    if list.get().is_empty() {
                        list.remove();
                    }
                }
            }
            self.base_seq += 1;
            removed += 1;
        }
        removed
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn get(&self, seq: u64) -> Option<&IndexedArticle> {
        let offset = seq.checked_sub(self.base_seq)?;
        self.articles.get(offset as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &IndexedArticle)> + '_ {
        self.articles
            .iter()
            .enumerate()
            .map(move |(i, a)| (self.base_seq + i as u64, a))
    }

    /// Sequence numbers of all stored articles whose timestamp lies in `range`.
    pub fn seqs_in<R: RangeBounds<Timestamp>>(&self, range: R) -> std::ops::Range<u64> {
        let lo = self
            .articles
            .partition_point(|a| !lower_ok(range.start_bound(), a.timestamp));
        let hi = self
            .articles
            .partition_point(|a| upper_ok(range.end_bound(), a.timestamp));
        let hi = hi.max(lo);
        (self.base_seq + lo as u64)..(self.base_seq + hi as u64)
    }

    /// Ids of articles in `range` sharing at least one indexed token with
    /// `query`, in timestamp order. A superset of every article with nonzero
    /// cosine similarity to the query.
    pub fn query_candidates<R: RangeBounds<Timestamp>>(
        &self,
        query: &WeightedVector,
        range: R,
    ) -> Vec<&str> {
        let mut seqs: Vec<u64> = Vec::new();
        for &(token, _) in query.entries() {
            if let Some(list) = self.postings.get(&token) {
                let (lo, hi) = posting_bounds(list, &range);
                seqs.extend(list.range(lo..hi).map(|p| p.seq));
            }
        }
        seqs.sort_unstable();
        seqs.dedup();
        seqs.into_iter()
            .map(|s| self.get(s).expect("posting resolves").id.as_str())
            .collect()
    }

    /// Cosine similarity of `query` against every article in `range` that
    /// shares a token with it, in sequence order.
    ///
    /// Dot products accumulate in increasing token-id order, so each value is
    /// bit-identical to [`super::cosine`] on the same pair.
    pub fn similarities<R: RangeBounds<Timestamp>>(
        &self,
        query: &WeightedVector,
        range: R,
    ) -> Vec<Match> {
        let mut dots: HashMap<u64, f64> = HashMap::new();
        for &(token, weight) in query.entries() {
            if let Some(list) = self.postings.get(&token) {
                let (lo, hi) = posting_bounds(list, &range);
                for p in list.range(lo..hi) {
                    *dots.entry(p.seq).or_insert(0.0) += weight * p.weight;
                }
            }
        }
        let mut out: Vec<Match> = dots
            .into_iter()
            .map(|(seq, dot)| {
                let other = self.get(seq).expect("posting resolves");
                Match {
                    seq,
                    similarity: cosine_from_dot(dot, query.norm(), other.vector.norm()),
                }
            })
            .filter(|m| m.similarity > 0.0)
            .collect();
        out.sort_unstable_by_key(|m| m.seq);
        out
    }
}

fn posting_bounds<R: RangeBounds<Timestamp>>(list: &VecDeque<Posting>, range: &R) -> (usize, usize) {
    let lo = list.partition_point(|p| !lower_ok(range.start_bound(), p.timestamp));
    let hi = list.partition_point(|p| upper_ok(range.end_bound(), p.timestamp));
    (lo, hi.max(lo))
}
