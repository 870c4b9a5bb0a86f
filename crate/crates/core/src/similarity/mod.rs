//! IDF-weighted vectors, cosine similarity, the inverted index used to find
//! similar articles inside a time window, and lag-binned similarity curves.

mod curve;
mod index;
mod vector;

pub use curve::{
    auto_similarity, cross_similarity, BinSpec, LagBin, SimilarityCurve, StreamItem,
    DEFAULT_PAIR_CAP, YEAR_MINUTES,
};
pub use index::{IndexedArticle, InvertedIndex, Match, OutOfOrderInsert};
pub use vector::{cosine, vectorize, vectorize_tokens, WeightedVector};
