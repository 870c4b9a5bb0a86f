use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tokenize;

/// Milliseconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

pub const MILLIS_PER_MINUTE: i64 = 60_000;

impl Timestamp {
    pub fn from_minutes(minutes: i64) -> Self {
        Timestamp(minutes * MILLIS_PER_MINUTE)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    /// Signed lag `later - self` in fractional minutes.
    pub fn minutes_until(self, later: Timestamp) -> f64 {
        (later.0 - self.0) as f64 / MILLIS_PER_MINUTE as f64
    }

    pub fn plus_millis(self, ms: i64) -> Self {
        Timestamp(self.0 + ms)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// News source identifier such as `RTRS` or `DJ`. The set is open.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Agency(pub String);

impl Agency {
    pub fn new(name: impl Into<String>) -> Self {
        Agency(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Agency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Agency {
    fn from(s: &str) -> Self {
        Agency(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Kind {
    /// One-line breaking news flash.
    Alert,
    /// One-line summary of non-breaking news.
    Headline,
    Story,
    /// Title line of a Dow Jones item.
    Title,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Alert, Kind::Headline, Kind::Story, Kind::Title];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Alert => "ALERT",
            Kind::Headline => "HEADLINE",
            Kind::Story => "STORY",
            Kind::Title => "TITLE",
        }
    }

    /// Whether novelty and topicality are computed for this kind.
    pub fn is_scored(self) -> bool {
        !matches!(self, Kind::Story)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown article kind {0:?} (expected ALERT, HEADLINE, STORY or TITLE)")]
pub struct ParseKindError(pub String);

impl FromStr for Kind {
    type Err = ParseKindError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ALERT" => Ok(Kind::Alert),
            "HEADLINE" => Ok(Kind::Headline),
            "STORY" => Ok(Kind::Story),
            "TITLE" => Ok(Kind::Title),
            other => Err(ParseKindError(other.to_string())),
        }
    }
}

/// One news item. `tokens` is always `tokenize(text)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Article {
    pub id: String,
    pub agency: Agency,
    pub timestamp: Timestamp,
    pub keywords: Vec<String>,
    pub kind: Kind,
    pub text: String,
    tokens: Vec<String>,
}

impl Article {
    pub fn new(
        id: impl Into<String>,
        agency: impl Into<Agency>,
        timestamp: Timestamp,
        keywords: Vec<String>,
        kind: Kind,
        text: impl Into<String>,
    ) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Article {
            id: id.into(),
            agency: agency.into(),
            timestamp,
            keywords,
            kind,
            text,
            tokens,
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn has_keyword(&self, keyword: &str) -> bool {
        self.keywords.iter().any(|k| k == keyword)
    }
}

impl From<String> for Agency {
    fn from(s: String) -> Self {
        Agency(s)
    }
}

/// Wire form of an article: one JSON object per line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct NewsRecord {
    pub id: String,
    pub agency: String,
    pub ts: i64,
    pub keywords: Vec<String>,
    pub kind: Kind,
    pub text: String,
}

impl From<NewsRecord> for Article {
    fn from(r: NewsRecord) -> Self {
        Article::new(r.id, r.agency, Timestamp(r.ts), r.keywords, r.kind, r.text)
    }
}

impl From<&Article> for NewsRecord {
    fn from(a: &Article) -> Self {
        NewsRecord {
            id: a.id.clone(),
            agency: a.agency.0.clone(),
            ts: a.timestamp.0,
            keywords: a.keywords.clone(),
            kind: a.kind,
            text: a.text.clone(),
        }
    }
}
