use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal, Zipf};

use super::news::{agency_name, keyword_name};
use super::{rng_for, SynthError, SynthSpec, STREAM_CORPUS, STREAM_CURVE};
use crate::corpus::{Article, Kind, MILLIS_PER_MINUTE};
use crate::similarity::{BinSpec, LagBin, SimilarityCurve};

const PLATEAU_END_MIN: f64 = 100.0;

/// Auto-similarity curve on the default log bins: flat at `sa_plateau`
/// below 100 minutes, then `sa_plateau·(Δt/100)^sa_exponent`, each bin
/// mean scaled by unit-median log-normal noise of sigma `sa_noise`.
pub fn gen_similarity_curve(spec: &SynthSpec, pairs_per_bin: u64) -> Result<SimilarityCurve, SynthError> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, STREAM_CURVE);
    let edges = BinSpec::default_auto().edges();
    let bins = edges
        .windows(2)
        .map(|w| {
            let mid = (w[0] * w[1]).sqrt();
            let clean = spec.sa_plateau * (mid.max(PLATEAU_END_MIN) / PLATEAU_END_MIN).powf(spec.sa_exponent);
            let z: f64 = StandardNormal.sample(&mut rng);
            LagBin {
                lo: w[0],
                hi: w[1],
                mean: Some(clean * (spec.sa_noise * z).exp()),
                pairs: pairs_per_bin,
                population: pairs_per_bin,
            }
        })
        .collect();
    Ok(SimilarityCurve { bins })
}

/// Unstructured corpus of `n` articles: each draws `tokens_per_article`
/// words (with replacement) from a Zipf vocabulary of `vocab_size` words,
/// with random agency, keyword and exponential inter-arrival times.
pub fn random_corpus(spec: &SynthSpec, n: usize) -> Result<Vec<Article>, SynthError> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, STREAM_CORPUS);
    let words = Zipf::new(spec.vocab_size as f64, spec.vocab_zipf).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let gaps = Exp::new(1.0 / 5.0).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let start = crate::market::session_timestamp(spec.start_date, 0);
    let mut minutes = 0.0;
    let articles = (0..n)
        .map(|i| {
            minutes += gaps.sample(&mut rng);
            let text: Vec<String> = (0..spec.tokens_per_article)
                .map(|_| format!("w{}", words.sample(&mut rng) as u64))
                .collect();
            let agency = agency_name(rng.random_range(0..spec.n_agencies));
            let keyword = keyword_name(rng.random_range(0..spec.n_keywords));
            let kind = if rng.random_bool(spec.alert_fraction) { Kind::Alert } else { Kind::Headline };
            Article::new(
                format!("r{i}"),
                agency,
                start.plus_millis((minutes * MILLIS_PER_MINUTE as f64) as i64),
                vec![keyword],
                kind,
                text.join(" "),
            )
        })
        .collect();
    Ok(articles)
}
