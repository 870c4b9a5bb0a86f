//! News articles: the data model, tokenization, JSONL ingestion and
//! corpus-level IDF statistics.

mod article;
mod idf;
mod news_io;
mod tokenize;

pub use article::{Agency, Article, Kind, ParseKindError, Timestamp, MILLIS_PER_MINUTE};
pub use idf::{build_idf, IdfBuilder, IdfScope, IdfTable, TokenId};
pub use news_io::{ingest_news, write_news, NewsReader};
pub use tokenize::tokenize;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed news record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: article {later_id} is timestamped before preceding article {earlier_id}")]
    OutOfOrder {
        line: usize,
        earlier_id: String,
        later_id: String,
    },
    #[error("line {line}: duplicate article id {id}")]
    DuplicateId { line: usize, id: String },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("idf table line {line}: {message}")]
    IdfFormat { line: usize, message: String },
}
