//! Novelty and topicality indicators for multi-agency news streams, and the
//! intraday market-response analysis used to evaluate them.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] ingests and tokenizes articles and builds IDF statistics.
//! * [`similarity`] turns articles into IDF-weighted binary vectors, compares
//!   them by cosine similarity, and computes lag-binned similarity curves.
//! * [`indicators`] scores each article's novelty (similarity to the
//!   preceding week) and topicality (similarity to other agencies' near
//!   simultaneous coverage).
//! * [`market`] normalizes minute-bar activity, aligns it on news events and
//!   fits response shapes.
//! * [`synthgen`] produces seeded synthetic news and bars with planted
//!   structure, plus a ledger from which expected scores follow directly.
//!
//! The `book/` directory at the repository root walks through each stage;
//! its code listings are compiled and run as doctests of this crate.

pub mod corpus;
pub mod indicators;
pub mod market;
pub mod similarity;
pub mod synthgen;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/similarity.md")]
    mod similarity {}
    #[doc = include_str!("../../../book/src/similarity_functions.md")]
    mod similarity_functions {}
    #[doc = include_str!("../../../book/src/indicators.md")]
    mod indicators {}
    #[doc = include_str!("../../../book/src/normalization.md")]
    mod normalization {}
    #[doc = include_str!("../../../book/src/event_study.md")]
    mod event_study {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
