use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{Article, CorpusError};

/// Index of a token in an [`IdfTable`]. Ids follow lexicographic token order.
pub type TokenId = u32;

/// Which articles count toward document frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum IdfScope {
    /// Every ingested article.
    #[default]
    Global,
    /// Only articles carrying this keyword.
    Keyword(String),
}

impl IdfScope {
    pub fn includes(&self, article: &Article) -> bool {
        match self {
            IdfScope::Global => true,
            IdfScope::Keyword(k) => article.has_keyword(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    token: String,
    doc_freq: u64,
    idf: f64,
}

/// Corpus document counts and `ln(total_docs / doc_freq)` weights.
///
/// Immutable once built; share it behind an `Arc` across scoring threads.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    total_docs: u64,
    ids: HashMap<String, TokenId>,
    entries: Vec<Entry>,
}

pub(crate) fn idf_value(total_docs: u64, doc_freq: u64) -> f64 {
    (total_docs as f64 / doc_freq as f64).ln()
}

/// Accumulates document frequencies one article at a time.
#[derive(Debug, Default)]
pub struct IdfBuilder {
    scope: IdfScope,
    total_docs: u64,
    doc_freq: HashMap<String, u64>,
}

impl IdfBuilder {
    pub fn new(scope: IdfScope) -> Self {
        IdfBuilder {
            scope,
            ..Default::default()
        }
    }

    pub fn add(&mut self, article: &Article) {
        if !self.scope.includes(article) {
            return;
        }
        self.total_docs += 1;
        // tokens are already deduplicated, so this counts documents
        for token in article.tokens() {
            *self.doc_freq.entry(token.clone()).or_insert(0) += 1;
        }
    }

    pub fn finish(self) -> Result<IdfTable, CorpusError> {
        if self.total_docs == 0 {
            return Err(CorpusError::EmptyCorpus);
        }
        Ok(IdfTable::from_counts(self.total_docs, self.doc_freq))
    }
}

/// Builds the IDF table over the articles selected by `scope`.
///
/// ```
/// use newspulse_core::corpus::{build_idf, Article, IdfScope, Kind, Timestamp};
///
/// let docs = ["gm recall", "gm profit", "profit apple", "apple recall"];
/// let articles: Vec<Article> = docs
///     .iter()
///     .enumerate()
///     .map(|(i, t)| Article::new(format!("a{i}"), "RTRS", Timestamp(i as i64), vec!["GM.N".into()], Kind::Alert, *t))
///     .collect();
/// let table = build_idf(&articles, &IdfScope::Global).unwrap();
/// assert_eq!(table.idf("gm"), Some(2f64.ln()));
/// ```
pub fn build_idf<'a>(
    articles: impl IntoIterator<Item = &'a Article>,
    scope: &IdfScope,
) -> Result<IdfTable, CorpusError> {
    let mut builder = IdfBuilder::new(scope.clone());
    for article in articles {
        builder.add(article);
    }
    builder.finish()
}

impl IdfTable {
    fn from_counts(total_docs: u64, doc_freq: HashMap<String, u64>) -> Self {
        let mut pairs: Vec<(String, u64)> = doc_freq.into_iter().collect();
        pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut ids = HashMap::with_capacity(pairs.len());
        let mut entries = Vec::with_capacity(pairs.len());
        for (i, (token, df)) in pairs.into_iter().enumerate() {
            ids.insert(token.clone(), i as TokenId);
            entries.push(Entry {
                idf: idf_value(total_docs, df),
                token,
                doc_freq: df,
            });
        }
        IdfTable {
            total_docs,
            ids,
            entries,
        }
    }

    pub fn total_docs(&self) -> u64 {
        self.total_docs
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.entries[id as usize].token
    }

    pub fn doc_freq(&self, token: &str) -> Option<u64> {
        self.token_id(token)
            .map(|id| self.entries[id as usize].doc_freq)
    }

    /// `None` for out-of-vocabulary tokens.
    pub fn idf(&self, token: &str) -> Option<f64> {
        self.token_id(token).map(|id| self.entries[id as usize].idf)
    }

    pub fn idf_by_id(&self, id: TokenId) -> f64 {
        self.entries[id as usize].idf
    }

    /// `(token, doc_freq, idf)` in token order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64, f64)> + '_ {
        self.entries
            .iter()
            .map(|e| (e.token.as_str(), e.doc_freq, e.idf))
    }

    /// Writes the table as TSV: a `#total_docs` header, then one
    /// `token\tdoc_freq\tidf` row per token, idf at 12 significant digits.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "#total_docs\t{}", self.total_docs)?;
        let mut line = String::new();
        for e in &self.entries {
            line.clear();
            let _ = write!(line, "{}\t{}\t{}", e.token, e.doc_freq, format_sig12(e.idf));
            writeln!(w, "{line}")?;
        }
        w.flush()
    }

    /// Reads a table written by [`IdfTable::write_tsv`].
    ///
    /// Weights are recomputed from the counts; the printed idf column is
    /// checked against them and otherwise only informational.
    pub fn read_tsv<R: BufRead>(r: R) -> Result<IdfTable, CorpusError> {
        let bad = |line: usize, message: String| CorpusError::IdfFormat { line, message };
        // leading `# ` lines are provenance comments
        let mut lines = r.lines().enumerate().skip_while(|(_, l)| matches!(l, Ok(l) if l.starts_with("# ")));
        let (header_idx, header) = match lines.next() {
            Some((i, Ok(h))) => (i, h),
            Some((i, Err(e))) => return Err(bad(i + 1, e.to_string())),
            None => return Err(bad(1, "empty file".into())),
        };
        let total_docs: u64 = header
            .strip_prefix("#total_docs\t")
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| bad(header_idx + 1, format!("expected '#total_docs\\t<N>', got {header:?}")))?;
        if total_docs == 0 {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut doc_freq = HashMap::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.map_err(|e| bad(line_no, e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(token), Some(df), Some(idf), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(bad(line_no, "expected 3 tab-separated fields".into()));
            };
            let df: u64 = df
                .parse()
                .map_err(|_| bad(line_no, format!("bad doc_freq {df:?}")))?;
            if df == 0 || df > total_docs {
                return Err(bad(
                    line_no,
                    format!("doc_freq {df} outside 1..={total_docs}"),
                ));
            }
            let printed: f64 = idf
                .parse()
                .map_err(|_| bad(line_no, format!("bad idf {idf:?}")))?;
            let exact = idf_value(total_docs, df);
            if (printed - exact).abs() > 1e-11 * exact.abs().max(1.0) {
                return Err(bad(
                    line_no,
                    format!("idf {printed} inconsistent with ln({total_docs}/{df})"),
                ));
            }
            if doc_freq.insert(token.to_string(), df).is_some() {
                return Err(bad(line_no, format!("duplicate token {token:?}")));
            }
        }
        Ok(IdfTable::from_counts(total_docs, doc_freq))
    }
}

/// Fixed-point rendering with 12 significant digits.
fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}
