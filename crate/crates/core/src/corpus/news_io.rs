use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::article::NewsRecord;
use super::{Article, CorpusError, Timestamp};

/// Streaming JSONL reader that validates each record as it goes.
///
/// Records must arrive in non-decreasing timestamp order and ids must be
/// unique; either violation is reported rather than repaired.
pub struct NewsReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    last: Option<(Timestamp, String)>,
    seen_ids: HashSet<String>,
    failed: bool,
}

impl<R: BufRead> NewsReader<R> {
    pub fn new(reader: R) -> Self {
        NewsReader {
            lines: reader.lines(),
            line_no: 0,
            last: None,
            seen_ids: HashSet::new(),
            failed: false,
        }
    }

    fn parse_line(&mut self, line: &str) -> Result<Article, CorpusError> {
        let record: NewsRecord =
            serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
                line: self.line_no,
                message: e.to_string(),
            })?;
        if let Some((last_ts, last_id)) = &self.last {
            if record.ts < last_ts.0 {
                return Err(CorpusError::OutOfOrder {
                    line: self.line_no,
                    earlier_id: last_id.clone(),
                    later_id: record.id,
                });
            }
        }
        if !self.seen_ids.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: self.line_no,
                id: record.id,
            });
        }
        self.last = Some((Timestamp(record.ts), record.id.clone()));
        Ok(record.into())
    }
}

impl NewsReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(NewsReader::new(BufReader::new(file)))
    }
}

impl<R: BufRead> Iterator for NewsReader<R> {
    type Item = Result<Article, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(CorpusError::Io {
                        path: format!("<line {}>", self.line_no + 1),
                        source: e,
                    }));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let result = self.parse_line(&line);
            if result.is_err() {
                self.failed = true;
            }
            return Some(result);
        }
    }
}

/// Reads and validates a whole news file.
pub fn ingest_news(path: impl AsRef<Path>) -> Result<Vec<Article>, CorpusError> {
    NewsReader::open(path)?.collect()
}

pub fn write_news<'a, W: Write>(
    writer: W,
    articles: impl IntoIterator<Item = &'a Article>,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for a in articles {
        serde_json::to_writer(&mut w, &NewsRecord::from(a))?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Kind;

    fn read(s: &str) -> Result<Vec<Article>, CorpusError> {
        NewsReader::new(s.as_bytes()).collect()
    }

    const THREE: &str = r#"{"id":"a1","agency":"RTRS","ts":1000,"keywords":["GM.N"],"kind":"ALERT","text":"GM recalls 2.6 mln vehicles"}
{"id":"a2","agency":"DJ","ts":1000,"keywords":["GM"],"kind":"TITLE","text":"GM to recall cars"}
{"id":"a3","agency":"BSW","ts":2500,"keywords":["GM.N","F.N"],"kind":"HEADLINE","text":"Autos: recall widens"}
"#;

    #[test]
    fn reads_three_records() {
        let articles = read(THREE).unwrap();
        assert_eq!(articles.len(), 3);
        assert_eq!(articles[0].id, "a1");
        assert_eq!(articles[0].agency.as_str(), "RTRS");
        assert_eq!(articles[1].kind, Kind::Title);
        assert_eq!(articles[2].keywords, vec!["GM.N", "F.N"]);
        assert_eq!(articles[0].tokens(), ["gm", "recalls", "2.6", "mln", "vehicles"]);

        let mut buf = Vec::new();
        write_news(&mut buf, &articles).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), THREE);
    }

    #[test]
    fn missing_timestamp_names_line() {
        let input = r#"{"id":"a1","agency":"RTRS","ts":1,"keywords":["X"],"kind":"ALERT","text":"x"}
{"id":"a2","agency":"RTRS","keywords":["X"],"kind":"ALERT","text":"y"}
"#;
        match read(input) {
            Err(CorpusError::Malformed { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("ts"), "{message}");
            }
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_order_names_both_ids() {
        let input = r#"{"id":"a1","agency":"RTRS","ts":1,"keywords":["X"],"kind":"ALERT","text":"x"}
{"id":"a2","agency":"RTRS","ts":30,"keywords":["X"],"kind":"ALERT","text":"y"}
{"id":"a3","agency":"RTRS","ts":20,"keywords":["X"],"kind":"ALERT","text":"z"}
"#;
        let err = read(input).unwrap_err();
        match &err {
            CorpusError::OutOfOrder {
                line,
                earlier_id,
                later_id,
            } => {
                assert_eq!(*line, 3);
                assert_eq!(earlier_id, "a2");
                assert_eq!(later_id, "a3");
            }
            other => panic!("unexpected {other:?}"),
        }
        let msg = err.to_string();
        assert!(msg.contains("a2") && msg.contains("a3"));
    }

    #[test]
    fn duplicate_id_rejected() {
        let input = r#"{"id":"a1","agency":"RTRS","ts":1,"keywords":["X"],"kind":"ALERT","text":"x"}
{"id":"a1","agency":"DJ","ts":2,"keywords":["X"],"kind":"ALERT","text":"x"}
"#;
        assert!(matches!(
            read(input),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn bad_kind_is_malformed() {
        let input = r#"{"id":"a1","agency":"RTRS","ts":1,"keywords":["X"],"kind":"FLASH","text":"x"}"#;
        assert!(matches!(
            read(input),
            Err(CorpusError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn blank_lines_skipped_but_counted() {
        let input = "\n{\"id\":\"a\",\"agency\":\"R\",\"ts\":1,\"keywords\":[],\"kind\":\"STORY\",\"text\":\"\"}\n\n{bad\n";
        let mut reader = NewsReader::new(input.as_bytes());
        assert!(reader.next().unwrap().is_ok());
        assert!(matches!(
            reader.next().unwrap(),
            Err(CorpusError::Malformed { line: 4, .. })
        ));
        assert!(reader.next().is_none());
    }
}
