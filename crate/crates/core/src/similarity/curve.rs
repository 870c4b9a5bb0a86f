use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::Timestamp;

use super::vector::{cosine, WeightedVector};

/// Minutes in a 365-day year, the default upper lag for the auto curve.
pub const YEAR_MINUTES: f64 = 525_600.0;

/// Default per-bin cap on evaluated pairs for the auto curve.
pub const DEFAULT_PAIR_CAP: u64 = 100_000;

/// Lag binning, in minutes. Bins are half-open `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BinSpec {
    Log {
        lo: f64,
        hi: f64,
        per_decade: u32,
    },
    Linear {
        lo: f64,
        hi: f64,
        width: f64,
    },
}

impl BinSpec {
    /// Log bins from 1 minute to one year, 10 per decade.
    pub fn default_auto() -> Self {
        BinSpec::Log {
            lo: 1.0,
            hi: YEAR_MINUTES,
            per_decade: 10,
        }
    }

    /// One-minute bins over `[-120, 120)`.
    pub fn default_cross() -> Self {
        BinSpec::Linear {
            lo: -120.0,
            hi: 120.0,
            width: 1.0,
        }
    }

    /// Ascending bin edges; the last edge is clipped to `hi`.
    pub fn edges(&self) -> Vec<f64> {
        let mut edges = Vec::new();
        match *self {
            BinSpec::Log { lo, hi, per_decade } => {
                assert!(lo > 0.0 && hi > lo && per_decade > 0, "invalid log bins");
                let start = lo.log10();
                let mut k = 0;
                loop {
                    let e = 10f64.powf(start + k as f64 / per_decade as f64);
                    if e >= hi {
                        edges.push(hi);
                        break;
                    }
                    edges.push(e);
                    k += 1;
                }
            }
            BinSpec::Linear { lo, hi, width } => {
                assert!(hi > lo && width > 0.0, "invalid linear bins");
                let n = ((hi - lo) / width).ceil() as usize;
                for k in 0..=n {
                    edges.push((lo + k as f64 * width).min(hi));
                }
                edges.dedup();
            }
        }
        edges
    }
}

/// Index of the bin `[edges[i], edges[i+1])` containing `lag`.
pub(crate) fn locate(edges: &[f64], lag: f64) -> Option<usize> {
    if edges.len() < 2 || !(lag >= edges[0]) || lag >= edges[edges.len() - 1] {
        return None;
    }
    Some(edges.partition_point(|&e| e <= lag) - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagBin {
    pub lo: f64,
    pub hi: f64,
    /// Mean similarity over evaluated pairs; `None` when the bin is empty.
    pub mean: Option<f64>,
    /// Pairs actually evaluated.
    pub pairs: u64,
    /// Pairs whose lag falls in the bin; exceeds `pairs` only when sampled.
    pub population: u64,
}

impl LagBin {
    /// Geometric midpoint, used as the bin's abscissa on log axes.
    pub fn geometric_mid(&self) -> f64 {
        (self.lo * self.hi).sqrt()
    }

    pub fn is_sampled(&self) -> bool {
        self.pairs < self.population
    }
}

/// Mean cosine similarity as a function of time lag.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityCurve {
    pub bins: Vec<LagBin>,
}

impl SimilarityCurve {
    fn from_sums(edges: &[f64], sums: &[(f64, u64, u64)]) -> Self {
        let bins = edges
            .windows(2)
            .zip(sums)
            .map(|(e, &(sum, pairs, population))| LagBin {
                lo: e[0],
                hi: e[1],
                mean: (pairs > 0).then(|| sum / pairs as f64),
                pairs,
                population,
            })
            .collect();
        SimilarityCurve { bins }
    }

    /// CSV with header `lag_lo_min,lag_hi_min,mean_sim,pairs`; empty bins
    /// leave `mean_sim` blank.
    pub fn write_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "lag_lo_min,lag_hi_min,mean_sim,pairs")?;
        for b in &self.bins {
            let mean = b.mean.map(|m| m.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", b.lo, b.hi, mean, b.pairs)?;
        }
        w.flush()
    }
}

/// A timestamped vector in a stream.
pub type StreamItem = (Timestamp, WeightedVector);

fn sorted_by_time(items: &[StreamItem]) -> Vec<&StreamItem> {
    let mut v: Vec<&StreamItem> = items.iter().collect();
    v.sort_by_key(|(t, _)| *t);
    v
}

/// Auto cosine similarity function: mean similarity of same-stream pairs
/// `(earlier, later)` binned by lag.
///
/// A bin holding more than `pair_cap` pairs is estimated from `pair_cap`
/// pairs drawn uniformly (with replacement) using a generator seeded from
/// `seed` and the bin index; smaller bins are exact.
pub fn auto_similarity(
    items: &[StreamItem],
    bins: &BinSpec,
    pair_cap: u64,
    seed: u64,
) -> SimilarityCurve {
    let edges = bins.edges();
    let sorted = sorted_by_time(items);
    let times: Vec<Timestamp> = sorted.iter().map(|(t, _)| *t).collect();
    let n = sorted.len();

    let sums: Vec<(f64, u64, u64)> = (0..edges.len() - 1)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = (edges[b], edges[b + 1]);
            // per earlier article i: partner range [start, end) of later articles
            let mut ranges = Vec::with_capacity(n);
            let mut cumulative = Vec::with_capacity(n + 1);
            let mut population = 0u64;
            cumulative.push(0u64);
            for i in 0..n {
                let later = &times[i + 1..];
                let start = i + 1 + later.partition_point(|&t| times[i].minutes_until(t) < lo);
                let end = i + 1 + later.partition_point(|&t| times[i].minutes_until(t) < hi);
                let end = end.max(start);
                population += (end - start) as u64;
                ranges.push((start, end));
                cumulative.push(population);
            }
            if population == 0 {
                return (0.0, 0, 0);
            }
            if population <= pair_cap {
                let mut sum = 0.0;
                for (i, &(start, end)) in ranges.iter().enumerate() {
                    for j in start..end {
                        sum += cosine(&sorted[i].1, &sorted[j].1);
                    }
                }
                (sum, population, population)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let mut sum = 0.0;
                for _ in 0..pair_cap {
                    let r = rng.random_range(0..population);
                    let i = cumulative.partition_point(|&c| c <= r) - 1;
                    let j = ranges[i].0 + (r - cumulative[i]) as usize;
                    sum += cosine(&sorted[i].1, &sorted[j].1);
                }
                (sum, pair_cap, population)
            }
        })
        .collect();
    SimilarityCurve::from_sums(&edges, &sums)
}

/// Reference articles per parallel block; fixed so the summation order does
/// not depend on the thread count.
const CROSS_BLOCK: usize = 512;

/// Cross cosine similarity function: mean similarity between each reference
/// article and other-agency articles at signed lag `t_other - t_reference`.
pub fn cross_similarity(
    reference: &[StreamItem],
    others: &[StreamItem],
    bins: &BinSpec,
) -> SimilarityCurve {
    let edges = bins.edges();
    let nbins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[nbins]);
    let reference = sorted_by_time(reference);
    let others = sorted_by_time(others);
    let other_times: Vec<Timestamp> = others.iter().map(|(t, _)| *t).collect();

    let blocks: Vec<Vec<(f64, u64)>> = reference
        .par_chunks(CROSS_BLOCK)
        .map(|block| {
            let mut acc = vec![(0.0, 0u64); nbins];
            for (t, v) in block {
                let start = other_times.partition_point(|&o| t.minutes_until(o) < lo);
                let end = other_times.partition_point(|&o| t.minutes_until(o) < hi);
                for (o_t, o_v) in &others[start..end.max(start)] {
                    if let Some(b) = locate(&edges, t.minutes_until(*o_t)) {
                        acc[b].0 += cosine(v, o_v);
                        acc[b].1 += 1;
                    }
                }
            }
            acc
        })
        .collect();

    let mut sums = vec![(0.0, 0u64, 0u64); nbins];
    for block in blocks {
        for (s, (sum, count)) in sums.iter_mut().zip(block) {
            s.0 += sum;
            s.1 += count;
            s.2 += count;
        }
    }
    SimilarityCurve::from_sums(&edges, &sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vec_of(ids: &[u32]) -> WeightedVector {
        WeightedVector::from_weights(ids.iter().map(|&i| (i, 1.0 + i as f64 * 0.1)))
    }

    /// All-pairs oracle: linear edge scan per pair.
    fn brute_auto(items: &[StreamItem], edges: &[f64]) -> Vec<(f64, u64)> {
        let mut acc = vec![(0.0, 0u64); edges.len() - 1];
        let sorted = sorted_by_time(items);
        for i in 0..sorted.len() {
            for j in i + 1..sorted.len() {
                let lag = sorted[i].0.minutes_until(sorted[j].0);
                for b in 0..edges.len() - 1 {
                    if lag >= edges[b] && lag < edges[b + 1] {
                        acc[b].0 += cosine(&sorted[i].1, &sorted[j].1);
                        acc[b].1 += 1;
                    }
                }
            }
        }
        acc
    }

    fn random_stream(seed: u64, n: usize, vocab: u32, span_min: i64) -> Vec<StreamItem> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = 0i64;
        (0..n)
            .map(|_| {
                t += rng.random_range(0..(span_min * 60_000 / n as i64) * 2);
                let ids: Vec<u32> = (0..rng.random_range(1..6)).map(|_| rng.random_range(0..vocab)).collect();
                (Timestamp(t), vec_of(&ids))
            })
            .collect()
    }

    #[test]
    fn default_edges() {
        let e = BinSpec::default_auto().edges();
        assert_eq!(e[0], 1.0);
        assert_eq!(*e.last().unwrap(), YEAR_MINUTES);
        assert!((e[10] - 10.0).abs() < 1e-9);
        assert_eq!(e.len(), 59);
        let c = BinSpec::default_cross().edges();
        assert_eq!(c.len(), 241);
        assert_eq!(c[120], 0.0);
    }

    #[test]
    fn locate_half_open() {
        let e = [0.0, 1.0, 2.0];
        assert_eq!(locate(&e, 0.0), Some(0));
        assert_eq!(locate(&e, 0.999), Some(0));
        assert_eq!(locate(&e, 1.0), Some(1));
        assert_eq!(locate(&e, 2.0), None);
        assert_eq!(locate(&e, -0.1), None);
        assert_eq!(locate(&e, f64::NAN), None);
    }

    #[test]
    fn identical_stream_is_all_ones() {
        let items: Vec<StreamItem> = (0..50).map(|i| (Timestamp::from_minutes(i * 37), vec_of(&[1, 2, 3]))).collect();
        let curve = auto_similarity(&items, &BinSpec::default_auto(), DEFAULT_PAIR_CAP, 1);
        let mut nonempty = 0;
        for b in &curve.bins {
            if let Some(m) = b.mean {
                nonempty += 1;
                assert!((m - 1.0).abs() < 1e-12);
            }
        }
        assert!(nonempty > 5);
    }

    #[test]
    fn disjoint_stream_is_all_zeros() {
        let items: Vec<StreamItem> = (0..50).map(|i| (Timestamp::from_minutes(i * 37), vec_of(&[i as u32]))).collect();
        let curve = auto_similarity(&items, &BinSpec::default_auto(), DEFAULT_PAIR_CAP, 1);
        assert!(curve.bins.iter().filter_map(|b| b.mean).all(|m| m == 0.0));
        assert!(curve.bins.iter().any(|b| b.pairs > 0));
    }

    #[test]
    fn auto_matches_all_pairs_oracle() {
        let items = random_stream(5, 200, 25, 200_000);
        let spec = BinSpec::default_auto();
        let curve = auto_similarity(&items, &spec, u64::MAX, 0);
        let oracle = brute_auto(&items, &spec.edges());
        for (b, (sum, count)) in curve.bins.iter().zip(oracle) {
            assert_eq!(b.pairs, count);
            assert_eq!(b.population, count);
            match b.mean {
                None => assert_eq!(count, 0),
                Some(m) => {
                    assert!((m - sum / count as f64).abs() < 1e-12);
                    assert!((0.0..=1.0).contains(&m));
                }
            }
        }
    }

    #[test]
    fn capped_bins_are_sampled_deterministically() {
        let items = random_stream(9, 600, 10, 2_000);
        let spec = BinSpec::default_auto();
        let cap = 500;
        let a = auto_similarity(&items, &spec, cap, 42);
        let b = auto_similarity(&items, &spec, cap, 42);
        assert_eq!(a, b);
        let exact = auto_similarity(&items, &spec, u64::MAX, 0);
        let mut sampled = 0;
        for (s, e) in a.bins.iter().zip(&exact.bins) {
            assert_eq!(s.population, e.population);
            if e.population > cap {
                sampled += 1;
                assert_eq!(s.pairs, cap);
                // 500 draws of a [0,1] variable: well within 0.1 of the exact mean
                assert!((s.mean.unwrap() - e.mean.unwrap()).abs() < 0.1);
            } else {
                assert_eq!(s, e);
            }
        }
        assert!(sampled > 0);
    }

    #[test]
    fn cross_peak_at_copy_lag() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut reference = Vec::new();
        let mut others = Vec::new();
        for k in 0..100u32 {
            let t = Timestamp::from_minutes(k as i64 * 500);
            let v = vec_of(&[k * 3, k * 3 + 1, 1000 + rng.random_range(0..5)]);
            others.push((t.plus_millis(5 * 60_000 + 1_000), v.clone()));
            // unrelated chatter from another agency
            let mut lag = rng.random_range(-90..90);
            if lag == 5 {
                lag = -5;
            }
            others.push((t.plus_millis(lag * 60_000), vec_of(&[2000 + k])));
            reference.push((t, v));
        }
        let spec = BinSpec::default_cross();
        let curve = cross_similarity(&reference, &others, &spec);
        let peak = curve
            .bins
            .iter()
            .max_by(|a, b| a.mean.unwrap_or(0.0).total_cmp(&b.mean.unwrap_or(0.0)))
            .unwrap();
        assert_eq!(peak.lo, 5.0);
        assert!((peak.mean.unwrap() - 1.0).abs() < 1e-12);

        // all-pairs oracle
        let edges = spec.edges();
        let mut acc = vec![(0.0, 0u64); edges.len() - 1];
        for (t, v) in &reference {
            for (o, w) in &others {
                if let Some(b) = locate(&edges, t.minutes_until(*o)) {
                    acc[b].0 += cosine(v, w);
                    acc[b].1 += 1;
                }
            }
        }
        for (bin, (sum, count)) in curve.bins.iter().zip(acc) {
            assert_eq!(bin.pairs, count);
            if count > 0 {
                assert!((bin.mean.unwrap() - sum / count as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_identical_copies_at_zero_lag() {
        let reference: Vec<StreamItem> = (0..10).map(|k| (Timestamp::from_minutes(k * 1000), vec_of(&[k as u32]))).collect();
        let curve = cross_similarity(&reference, &reference.clone(), &BinSpec::default_cross());
        let zero = curve.bins.iter().find(|b| b.lo == 0.0).unwrap();
        assert_eq!(zero.pairs, 10);
        assert_eq!(zero.mean, Some(1.0));
    }

    #[test]
    fn cross_nothing_in_range() {
        let reference = vec![(Timestamp::from_minutes(0), vec_of(&[1]))];
        let others = vec![(Timestamp::from_minutes(500), vec_of(&[1]))];
        let curve = cross_similarity(&reference, &others, &BinSpec::default_cross());
        assert!(curve.bins.iter().all(|b| b.pairs == 0 && b.mean.is_none()));
    }

    #[test]
    fn csv_layout() {
        let curve = SimilarityCurve {
            bins: vec![
                LagBin { lo: 1.0, hi: 2.0, mean: Some(0.25), pairs: 4, population: 4 },
                LagBin { lo: 2.0, hi: 3.0, mean: None, pairs: 0, population: 0 },
            ],
        };
        let mut buf = Vec::new();
        curve.write_csv(&mut buf, Some("test")).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# test\nlag_lo_min,lag_hi_min,mean_sim,pairs\n1,2,0.25,4\n2,3,,0\n"
        );
    }
}
