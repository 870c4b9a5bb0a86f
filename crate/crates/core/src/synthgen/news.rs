use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric, Zipf};
use serde::{Deserialize, Serialize};

use super::{rng_for, SynthError, SynthSpec, STREAM_NEWS};
use crate::corpus::{Agency, Article, Kind, Timestamp, MILLIS_PER_MINUTE};
use crate::indicators::{ScoringConfig, TopAggregation};
use crate::market::{session_timestamp, SESSION_MINUTES};

const AGENCY_NAMES: [&str; 6] = ["RTRS", "DJ", "BSW", "PRN", "MKW", "BNW"];

/// Name of the `i`-th synthetic agency.
pub fn agency_name(i: usize) -> String {
    AGENCY_NAMES.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("AG{i}"))
}

/// Name of the `i`-th synthetic keyword; its ticker is the part before `.N`.
pub fn keyword_name(i: usize) -> String {
    format!("SYN{i}.N")
}

/// Ground truth for one generated article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub id: String,
    pub cluster: u64,
    /// Position in the cluster's follow-up chain; copies share their
    /// source's index.
    pub chain_index: u32,
    /// Ids of cross-agency copies of this article (empty for copies).
    pub copies: Vec<String>,
}

/// One article before its text is rendered. Field order is the stream
/// order: timestamp, then cluster, member, and source before its copies.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Skeleton {
    ts: i64,
    cluster: u64,
    member: u32,
    /// 0 for the source, `1 + agency` for a copy.
    slot: u32,
    agency: u32,
    kind: Kind,
    keyword: u32,
    /// For a source, the agencies holding a copy.
    copy_mask: u64,
}

/// Timestamp-ordered article stream with its ledger, generated lazily.
///
/// Clusters are generated in order of their first article; an article is
/// released once no future cluster can precede it, so memory holds only
/// clusters still in progress.
pub struct NewsStream {
    spec: SynthSpec,
    rng: ChaCha8Rng,
    calendar: Vec<NaiveDate>,
    keyword_dist: Zipf<f64>,
    chain_dist: Option<Geometric>,
    gap_dist: Exp<f64>,
    origin_dist: Exp<f64>,
    clock_min: f64,
    next_origin: Option<i64>,
    next_cluster: u64,
    heap: BinaryHeap<Reverse<Skeleton>>,
    agencies: Vec<String>,
    core: usize,
    own: usize,
}

/// Starts the synthetic news stream for `spec`.
pub fn gen_news(spec: &SynthSpec) -> Result<NewsStream, SynthError> {
    spec.validate()?;
    let invalid = |e: rand_distr::ExpError| SynthError::InvalidSpec(e.to_string());
    let chain_dist = if spec.chain_mean > 1.0 {
        Some(Geometric::new(1.0 / spec.chain_mean).map_err(|e| SynthError::InvalidSpec(e.to_string()))?)
    } else {
        None
    };
    let mut stream = NewsStream {
        spec: spec.clone(),
        rng: rng_for(spec.seed, STREAM_NEWS),
        calendar: spec.calendar(),
        keyword_dist: Zipf::new(spec.n_keywords as f64, spec.keyword_zipf)
            .map_err(|e| SynthError::InvalidSpec(e.to_string()))?,
        chain_dist,
        gap_dist: Exp::new(1.0 / spec.followup_gap_min).map_err(invalid)?,
        origin_dist: Exp::new(spec.cluster_rate / SESSION_MINUTES as f64).map_err(invalid)?,
        clock_min: 0.0,
        next_origin: None,
        next_cluster: 0,
        heap: BinaryHeap::new(),
        agencies: (0..spec.n_agencies).map(agency_name).collect(),
        core: spec.core_tokens(),
        own: spec.own_tokens(),
    };
    stream.advance_origin();
    Ok(stream)
}

fn minutes_to_millis(m: f64) -> i64 {
    (m * MILLIS_PER_MINUTE as f64).round() as i64
}

impl NewsStream {
    /// Moves the cluster clock (session minutes since the first open) to the
    /// next cluster start.
    fn advance_origin(&mut self) {
        self.clock_min += self.origin_dist.sample(&mut self.rng);
        let day = (self.clock_min / SESSION_MINUTES as f64).floor() as usize;
        self.next_origin = self.calendar.get(day).map(|&date| {
            let within = self.clock_min - (day * SESSION_MINUTES as usize) as f64;
            let minute = (within.floor() as u16).min(SESSION_MINUTES - 1);
            session_timestamp(date, minute).0 + minutes_to_millis(within - minute as f64)
        });
    }

    fn spawn_cluster(&mut self, origin: i64) {
        let cluster = self.next_cluster;
        self.next_cluster += 1;
        let n = self.spec.n_agencies;
        let agency = self.rng.random_range(0..n) as u32;
        let keyword = (self.keyword_dist.sample(&mut self.rng) as u32).saturating_sub(1);
        let length = match &self.chain_dist {
            Some(g) => (1 + g.sample(&mut self.rng) as usize).min(self.spec.chain_max),
            None => 1,
        };
        let mut ts = origin;
        for member in 0..length as u32 {
            if member > 0 {
                ts += minutes_to_millis(self.gap_dist.sample(&mut self.rng));
            }
            let kind = if self.rng.random_bool(self.spec.alert_fraction) {
                Kind::Alert
            } else {
                Kind::Headline
            };
            let copy_prob = match kind {
                Kind::Headline => self.spec.headline_copy_prob.unwrap_or(self.spec.copy_prob),
                _ => self.spec.copy_prob,
            };
            let mut copy_mask = 0u64;
            for other in (0..n as u32).filter(|&b| b != agency) {
                if self.rng.random_bool(copy_prob) {
                    let lag = minutes_to_millis(self.rng.random::<f64>() * self.spec.copy_lag_max_min);
                    copy_mask |= 1 << other;
                    let copy_kind = if self.agencies[other as usize] == "DJ" { Kind::Title } else { kind };
                    self.heap.push(Reverse(Skeleton {
                        ts: ts + lag,
                        cluster,
                        member,
                        slot: 1 + other,
                        agency: other,
                        kind: copy_kind,
                        keyword,
                        copy_mask: 0,
                    }));
                }
            }
            self.heap.push(Reverse(Skeleton {
                ts,
                cluster,
                member,
                slot: 0,
                agency,
                kind,
                keyword,
                copy_mask,
            }));
        }
    }

    fn member_id(cluster: u64, member: u32) -> String {
        format!("c{cluster}m{member}")
    }

    fn render(&self, s: &Skeleton) -> (Article, LedgerEntry) {
        let source_id = Self::member_id(s.cluster, s.member);
        let id = if s.slot == 0 {
            source_id.clone()
        } else {
            format!("{source_id}-{}", self.agencies[s.agency as usize])
        };
        let mut words: Vec<String> = (0..self.core).map(|j| format!("c{}k{j}", s.cluster)).collect();
        words.extend((0..self.own).map(|j| format!("{source_id}u{j}")));
        let article = Article::new(
            id.clone(),
            Agency::new(self.agencies[s.agency as usize].clone()),
            Timestamp(s.ts),
            vec![keyword_name(s.keyword as usize)],
            s.kind,
            words.join(" "),
        );
        let copies = (0..self.spec.n_agencies)
            .filter(|&b| s.copy_mask & (1 << b) != 0)
            .map(|b| format!("{source_id}-{}", self.agencies[b]))
            .collect();
        let entry = LedgerEntry {
            id,
            cluster: s.cluster,
            chain_index: s.member,
            copies,
        };
        (article, entry)
    }
}

impl Iterator for NewsStream {
    type Item = (Article, LedgerEntry);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let ready = match (self.heap.peek(), self.next_origin) {
                (Some(Reverse(top)), Some(origin)) => top.ts < origin,
                (Some(_), None) => true,
                (None, None) => return None,
                (None, Some(_)) => false,
            };
            if ready {
                let Reverse(s) = self.heap.pop().expect("peeked");
                return Some(self.render(&s));
            }
            let origin = self.next_origin.expect("origin pending");
            self.spawn_cluster(origin);
            self.advance_origin();
        }
    }
}

pub fn write_ledger<'a, W: Write>(mut w: W, entries: impl IntoIterator<Item = &'a LedgerEntry>) -> std::io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_ledger<R: BufRead>(reader: R) -> Result<Vec<LedgerEntry>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SynthError::LedgerMismatch(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| SynthError::LedgerMismatch(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// Scores predicted from the ledger alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedScore {
    pub id: String,
    pub keyword: String,
    pub novelty: f64,
    pub topicality: f64,
}

/// Predicts every article's novelty and topicality without tokenizing or
/// indexing anything.
///
/// With global IDF over `N` articles, a cluster's core tokens appear in all
/// `n_c` of its articles and a member's private tokens in the member and its
/// `k` copies, so their weights are `ln(N/n_c)` and `ln(N/(1+k))`. Two
/// articles of the same member are identical (similarity 1), two members of
/// one cluster share only the core tokens, and different clusters share
/// nothing.
pub fn expected_scores(
    spec: &SynthSpec,
    articles: &[Article],
    ledger: &[LedgerEntry],
    config: &ScoringConfig,
) -> Result<Vec<ExpectedScore>, SynthError> {
    if articles.len() != ledger.len() {
        return Err(SynthError::LedgerMismatch(format!(
            "{} articles but {} ledger entries",
            articles.len(),
            ledger.len()
        )));
    }
    let n = articles.len() as f64;
    let (core, own) = (spec.core_tokens() as f64, spec.own_tokens() as f64);

    let mut cluster_size: HashMap<u64, usize> = HashMap::new();
    let mut copies: HashMap<(u64, u32), usize> = HashMap::new();
    let mut members: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, (a, e)) in articles.iter().zip(ledger).enumerate() {
        if a.id != e.id {
            return Err(SynthError::LedgerMismatch(format!("article {} vs ledger {}", a.id, e.id)));
        }
        *cluster_size.entry(e.cluster).or_default() += 1;
        if !e.copies.is_empty() {
            copies.insert((e.cluster, e.chain_index), e.copies.len());
        }
        members.entry(e.cluster).or_default().push(i);
    }

    let weight = |df: usize| (n / df as f64).ln();
    let core_weight = |cluster: u64| weight(cluster_size[&cluster]);
    let own_weight = |e: &LedgerEntry| weight(1 + copies.get(&(e.cluster, e.chain_index)).copied().unwrap_or(0));
    let norm = |e: &LedgerEntry| {
        let (wc, wo) = (core_weight(e.cluster), own_weight(e));
        (core * wc * wc + own * wo * wo).sqrt()
    };
    let similarity = |x: &LedgerEntry, y: &LedgerEntry| -> f64 {
        let (nx, ny) = (norm(x), norm(y));
        if x.cluster != y.cluster || nx == 0.0 || ny == 0.0 {
            0.0
        } else if x.chain_index == y.chain_index {
            1.0
        } else {
            let wc = core_weight(x.cluster);
            (core * wc * wc / (nx * ny)).min(1.0)
        }
    };

    let mut out = Vec::with_capacity(articles.len());
    for (a, e) in articles.iter().zip(ledger) {
        let at = a.timestamp.0;
        let mut novelty = 0.0;
        let mut per_agency: BTreeMap<&Agency, f64> = BTreeMap::new();
        for &j in &members[&e.cluster] {
            let (b, f) = (&articles[j], &ledger[j]);
            let s = similarity(e, f);
            let t = b.timestamp.0;
            if t > at - config.tau_millis && t < at && config.history_sources.allows(&b.agency) {
                novelty += s;
            }
            if b.agency != a.agency && (t - at).abs() <= config.half_width_millis && s > 0.0 {
                let slot = per_agency.entry(&b.agency).or_insert(0.0);
                match config.aggregation {
                    TopAggregation::Max => *slot = slot.max(s),
                    TopAggregation::Sum => *slot += s,
                }
            }
        }
        out.push(ExpectedScore {
            id: a.id.clone(),
            keyword: a.keywords[0].clone(),
            novelty,
            topicality: per_agency.values().sum(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_idf, IdfScope};
    use crate::indicators::score_articles;
    use std::collections::HashSet;
    use std::sync::Arc;

    fn small() -> SynthSpec {
        SynthSpec {
            seed: 5,
            n_days: 5,
            cluster_rate: 30.0,
            ..Default::default()
        }
    }

    fn generate(spec: &SynthSpec) -> (Vec<Article>, Vec<LedgerEntry>) {
        gen_news(spec).unwrap().unzip()
    }

    #[test]
    fn stream_is_sorted_and_ledger_complete() {
        let (articles, ledger) = generate(&small());
        assert!(articles.len() > 300);
        assert!(articles.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        let ids: HashSet<&str> = articles.iter().map(|a| a.id.as_str()).collect();
        assert_eq!(ids.len(), articles.len());
        let mut copy_ids = HashSet::new();
        for e in &ledger {
            for c in &e.copies {
                assert!(ids.contains(c.as_str()));
                assert!(copy_ids.insert(c.clone()));
            }
        }
        let copy_count = articles.iter().filter(|a| a.id.contains('-')).count();
        assert_eq!(copy_ids.len(), copy_count);
    }

    #[test]
    fn same_seed_same_stream() {
        let a = generate(&small());
        let b = generate(&small());
        assert_eq!(a, b);
        let c = generate(&SynthSpec { seed: 6, ..small() });
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn dj_copies_are_titles() {
        let (articles, _) = generate(&small());
        for a in articles.iter().filter(|a| a.id.ends_with("-DJ")) {
            assert_eq!(a.kind, Kind::Title);
        }
        assert!(articles.iter().any(|a| a.id.ends_with("-DJ")));
    }

    fn check_against_scorer(spec: &SynthSpec, config: ScoringConfig) -> Vec<ExpectedScore> {
        let (articles, ledger) = generate(spec);
        let expected = expected_scores(spec, &articles, &ledger, &config).unwrap();
        let idf = Arc::new(build_idf(&articles, &IdfScope::Global).unwrap());
        let got = score_articles(articles, idf, config).unwrap();
        assert_eq!(got.len(), expected.len());
        let by_id: HashMap<&str, &ExpectedScore> = expected.iter().map(|e| (e.id.as_str(), e)).collect();
        for r in &got {
            let e = by_id[r.id.as_str()];
            assert!((r.novelty - e.novelty).abs() < 1e-9, "{}: {} vs {}", r.id, r.novelty, e.novelty);
            assert!((r.topicality - e.topicality).abs() < 1e-9, "{}: {} vs {}", r.id, r.topicality, e.topicality);
        }
        expected
    }

    #[test]
    fn ledger_predicts_scorer() {
        check_against_scorer(&small(), ScoringConfig::default());
        let sum = ScoringConfig { aggregation: TopAggregation::Sum, ..Default::default() };
        check_against_scorer(&SynthSpec { overlap: 0.25, seed: 8, ..small() }, sum);
        let short = ScoringConfig { tau_millis: 90 * MILLIS_PER_MINUTE, half_width_millis: 5 * MILLIS_PER_MINUTE, ..Default::default() };
        check_against_scorer(&SynthSpec { copy_lag_max_min: 40.0, seed: 9, ..small() }, short);
    }

    #[test]
    fn full_zero_lag_copies_give_full_topicality() {
        let spec = SynthSpec { copy_prob: 1.0, copy_lag_max_min: 0.0, ..small() };
        for e in check_against_scorer(&spec, ScoringConfig::default()) {
            assert!((e.topicality - (spec.n_agencies - 1) as f64).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn single_member_disjoint_clusters_have_zero_novelty() {
        let spec = SynthSpec { chain_mean: 1.0, overlap: 0.0, copy_prob: 0.0, ..small() };
        for e in check_against_scorer(&spec, ScoringConfig::default()) {
            assert_eq!(e.novelty, 0.0);
        }
    }

    #[test]
    fn copied_alerts_outrank_uncopied_headlines() {
        let spec = SynthSpec { copy_prob: 1.0, headline_copy_prob: Some(0.0), ..small() };
        let (articles, _) = generate(&spec);
        let expected = check_against_scorer(&spec, ScoringConfig::default());
        let mean_top = |kind: Kind| {
            let v: Vec<f64> = articles
                .iter()
                .zip(&expected)
                .filter(|(a, _)| a.kind == kind && !a.id.contains('-'))
                .map(|(_, e)| e.topicality)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean_top(Kind::Alert) > mean_top(Kind::Headline) + 1.0);
    }

    #[test]
    fn ledger_round_trip() {
        let (_, ledger) = generate(&small());
        let mut buf = Vec::new();
        write_ledger(&mut buf, &ledger).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("{\"id\":"));
        assert_eq!(read_ledger(buf.as_slice()).unwrap(), ledger);
    }
}
