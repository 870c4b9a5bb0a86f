use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use rayon::prelude::*;

use newspulse_core::corpus::{build_idf, ingest_news, write_news, Agency, Article, IdfTable, Kind};
use newspulse_core::indicators::{classify_by_keyword, score_articles, write_scores_csv, Labels, Level, ScoreRecord};
use newspulse_core::market::{
    align_event, event_study, fit_exponential, fit_power_law, ingest_bars, normalize, raw_series, window_stats,
    write_bars, ActivitySeries, FitError, MarketError, Measure, MinuteBar, OffHours,
};
use newspulse_core::similarity::{auto_similarity, cross_similarity, vectorize, SimilarityCurve, StreamItem};
use newspulse_core::synthgen::{gen_bars, gen_news, keyword_name, write_ledger};

use crate::config::{RunConfig, SNAPSHOT_NAME};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Build the IDF table.
    Idf,
    /// Novelty and topicality per (article, keyword).
    Score,
    /// Auto and cross similarity functions.
    Simfunc,
    /// Market response around scored news.
    Eventstudy,
    /// Synthetic news, ledger and minute bars.
    Synth,
}

pub fn run(command: Command, config: &RunConfig) -> Result<(), CliError> {
    let out = config.out_dir()?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(SNAPSHOT_NAME), config.snapshot())?;
    match command {
        Command::Idf => cmd_idf(config, out),
        Command::Score => cmd_score(config, out),
        Command::Simfunc => cmd_simfunc(config, out),
        Command::Eventstudy => cmd_eventstudy(config, out),
        Command::Synth => cmd_synth(config, out),
    }
}

fn create(path: PathBuf) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn load_news(config: &RunConfig) -> Result<Vec<Article>, CliError> {
    let path = config.require(&config.news, "news")?;
    ingest_news(path).map_err(validation)
}

/// The configured IDF table, or one built from `articles` in the configured
/// scope.
fn load_idf(config: &RunConfig, articles: &[Article]) -> Result<IdfTable, CliError> {
    match &config.idf {
        Some(_) => {
            let path = config.require(&config.idf, "idf")?;
            IdfTable::read_tsv(BufReader::new(File::open(path)?)).map_err(validation)
        }
        None => build_idf(articles, &config.idf_scope()?).map_err(|e| CliError::Empty(e.to_string())),
    }
}

fn cmd_idf(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let articles = load_news(config)?;
    let table = build_idf(&articles, &config.idf_scope()?).map_err(|e| CliError::Empty(e.to_string()))?;
    let mut w = create(out.join("idf.tsv"))?;
    writeln!(w, "# {}", config.provenance())?;
    table.write_tsv(&mut w)?;
    log::info!("idf: {} tokens over {} articles", table.len(), table.total_docs());
    Ok(())
}

/// Every score record for the configured keyword (all keywords when unset),
/// labelled against its keyword's mean over all kinds.
fn scored(config: &RunConfig, articles: Vec<Article>, idf: IdfTable) -> Result<Vec<(ScoreRecord, Labels)>, CliError> {
    let records = score_articles(articles, Arc::new(idf), config.scoring()?).map_err(validation)?;
    let records: Vec<ScoreRecord> = match &config.keyword {
        Some(k) => records.into_iter().filter(|r| &r.keyword == k).collect(),
        None => records,
    };
    let labels = classify_by_keyword(&records).map_err(|_| CliError::Empty("no articles to score".into()))?;
    Ok(records.into_iter().zip(labels).collect())
}

fn cmd_score(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let articles = load_news(config)?;
    let idf = load_idf(config, &articles)?;
    let kind = config.kind_filter()?;
    let (records, labels): (Vec<_>, Vec<_>) = scored(config, articles, idf)?
        .into_iter()
        .filter(|(r, _)| kind.is_none_or(|k| r.kind == k))
        .unzip();
    if records.is_empty() {
        return Err(CliError::Empty("no articles match the keyword and kind filters".into()));
    }
    let w = create(out.join("scores.csv"))?;
    write_scores_csv(w, &records, &labels, Some(&config.provenance()))?;
    log::info!("score: {} records", records.len());
    Ok(())
}

fn cmd_simfunc(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let articles = load_news(config)?;
    let idf = load_idf(config, &articles)?;
    let kind = config.kind_filter()?;
    let selected: Vec<&Article> = articles
        .iter()
        .filter(|a| config.keyword.as_ref().is_none_or(|k| a.has_keyword(k)))
        .filter(|a| kind.is_none_or(|k| a.kind == k))
        .collect();
    let item = |a: &&Article| -> StreamItem { (a.timestamp, vectorize(a, &idf)) };
    let auto_items: Vec<StreamItem> = selected
        .iter()
        .filter(|a| config.sa_agency.as_ref().is_none_or(|g| a.agency.as_str() == g))
        .map(item)
        .collect();
    let reference_agency = Agency::new(config.reference_agency.clone());
    let (reference, others): (Vec<&Article>, Vec<&Article>) =
        selected.iter().partition(|a| a.agency == reference_agency);
    if auto_items.len() < 2 && (reference.is_empty() || others.is_empty()) {
        return Err(CliError::Empty("too few articles for a similarity function".into()));
    }
    let reference: Vec<StreamItem> = reference.iter().map(item).collect();
    let others: Vec<StreamItem> = others.iter().map(item).collect();

    let sa = auto_similarity(&auto_items, &config.auto_bins(), config.pair_cap, config.seed);
    let sc = cross_similarity(&reference, &others, &config.cross_bins());
    let provenance = config.provenance();
    sa.write_csv(create(out.join("sa.csv"))?, Some(&provenance))?;
    sc.write_csv(create(out.join("sc.csv"))?, Some(&provenance))?;
    write_power_report(config, &sa, &out.join("sa_powerlaw.txt"))
}

fn write_power_report(config: &RunConfig, sa: &SimilarityCurve, path: &Path) -> Result<(), CliError> {
    let mut w = create(path.to_path_buf())?;
    writeln!(w, "# {}", config.provenance())?;
    writeln!(w, "model=power_law")?;
    writeln!(w, "lo_min={}", config.power_lo_min)?;
    writeln!(w, "hi_min={}", config.power_hi_min)?;
    match fit_power_law(sa, config.power_lo_min, config.power_hi_min) {
        Ok(fit) => {
            writeln!(w, "status=ok")?;
            writeln!(w, "exponent={}", fit.exponent)?;
            writeln!(w, "intercept={}", fit.intercept)?;
            writeln!(w, "r_squared={}", fit.r_squared)?;
            writeln!(w, "bins={}", fit.bins)?;
            w.flush()?;
            Ok(())
        }
        Err(e) => {
            writeln!(w, "status=failed")?;
            w.flush()?;
            Err(CliError::Fit(format!("auto-similarity power law: {e}")))
        }
    }
}

/// Ticker traded on a keyword's news: the part before the first '.'.
pub fn ticker_of(keyword: &str) -> &str {
    keyword.split('.').next().unwrap_or(keyword)
}

const GROUPS: [&str; 5] = ["all", "nov_high", "nov_low", "top_high", "top_low"];

fn in_group(group: &str, l: &Labels) -> bool {
    match group {
        "all" => true,
        "nov_high" => l.novelty == Level::High,
        "nov_low" => l.novelty == Level::Low,
        "top_high" => l.topicality == Level::High,
        "top_low" => l.topicality == Level::Low,
        _ => unreachable!("unknown group {group}"),
    }
}

fn cmd_eventstudy(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let measures = config.measures()?;
    let articles = load_news(config)?;
    let bars_path = config.require(&config.bars, "bars")?;
    let idf = load_idf(config, &articles)?;
    let records = match scored(config, articles, idf) {
        Err(CliError::Empty(_)) => return Err(CliError::Empty("no usable events".into())),
        r => r?,
    };
    let bars = ingest_bars(bars_path).map_err(validation)?;
    let mut by_ticker: BTreeMap<&str, Vec<MinuteBar>> = BTreeMap::new();
    for bar in &bars {
        by_ticker.entry(bar.ticker.as_str()).or_default().push(bar.clone());
    }
    let policy = if config.preopen_to_open { OffHours::PreOpenToOpen } else { OffHours::Drop };
    let kind_filter = config.kind_filter()?;
    let keywords: BTreeSet<&str> = records.iter().map(|(r, _)| r.keyword.as_str()).collect();

    // normalize each (ticker, measure) once, in parallel
    let tickers: BTreeSet<&str> = keywords.iter().map(|k| ticker_of(k)).filter(|t| by_ticker.contains_key(t)).collect();
    let jobs: Vec<(&str, Measure)> = tickers.iter().flat_map(|&t| measures.iter().map(move |&m| (t, m))).collect();
    let activity: BTreeMap<(&str, Measure), ActivitySeries> = jobs
        .par_iter()
        .map(|&(t, m)| normalize(&raw_series(&by_ticker[t], t, m)).map(|a| ((t, m), a)))
        .collect::<Result<_, MarketError>>()
        .map_err(validation)?;

    let curves_dir = out.join("curves");
    let fits_dir = out.join("fits");
    std::fs::create_dir_all(&curves_dir)?;
    std::fs::create_dir_all(&fits_dir)?;
    let provenance = config.provenance();
    let mut table = create(out.join("window_means.csv"))?;
    writeln!(table, "# {provenance}")?;
    writeln!(table, "keyword,kind,group,measure,events,mean,std_error")?;
    let mut curves_written = 0usize;
    let mut fit_failures = Vec::new();

    for &keyword in &keywords {
        let ticker = ticker_of(keyword);
        if !tickers.contains(ticker) {
            log::warn!("no bars for ticker {ticker} (keyword {keyword})");
            continue;
        }
        let kinds: BTreeSet<Kind> = records
            .iter()
            .filter(|(r, _)| r.keyword == keyword)
            .map(|(r, _)| r.kind)
            .filter(|k| kind_filter.is_none_or(|f| f == *k))
            .collect();
        for kind in kinds {
            for group in GROUPS {
                let events: Vec<_> = records
                    .iter()
                    .filter(|(r, l)| r.keyword == keyword && r.kind == kind && in_group(group, l))
                    .filter_map(|(r, _)| align_event(r.timestamp, policy))
                    .collect();
                for &measure in &measures {
                    let series = &activity[&(ticker, measure)];
                    let curve = match event_study(series, &events, config.lag_lo..=config.lag_hi) {
                        Ok(c) => c,
                        Err(MarketError::NoUsableEvents) => continue,
                        Err(e) => return Err(validation(e)),
                    };
                    let stem = format!("{keyword}_{kind}_{group}_{measure}");
                    curve.write_csv(create(curves_dir.join(format!("{stem}.csv")))?, Some(&provenance))?;
                    curves_written += 1;
                    let stats = window_stats(series, &events, config.window_lo, config.window_hi).map_err(validation)?;
                    writeln!(
                        table,
                        "{keyword},{kind},{group},{measure},{},{},{}",
                        stats.events, stats.mean, stats.std_error
                    )?;
                    if group != "all" {
                        continue;
                    }
                    let stem = format!("{keyword}_{kind}_{measure}");
                    match fit_exponential(&curve, config.fit_lo, config.fit_hi) {
                        Ok(fit) => {
                            fit.write_report(create(fits_dir.join(format!("{stem}.txt")))?, Some(&provenance))?;
                            fit.write_residuals_csv(
                                create(fits_dir.join(format!("{stem}_residuals.csv")))?,
                                Some(&provenance),
                            )?;
                        }
                        Err(FitError::NotConverged { best }) => {
                            best.write_report(create(fits_dir.join(format!("{stem}.txt")))?, Some(&provenance))?;
                            fit_failures.push(format!("{stem}: not converged"));
                        }
                        Err(e) => fit_failures.push(format!("{stem}: {e}")),
                    }
                }
            }
        }
    }
    table.flush()?;
    if curves_written == 0 {
        return Err(CliError::Empty("no usable events".into()));
    }
    log::info!("eventstudy: {curves_written} curves");
    if !fit_failures.is_empty() {
        return Err(CliError::Fit(fit_failures.join("; ")));
    }
    Ok(())
}

fn cmd_synth(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let spec = &config.synth;
    let stream = gen_news(spec).map_err(validation)?;
    let mut news = create(out.join("news.jsonl"))?;
    let mut ledger = create(out.join("ledger.jsonl"))?;
    let mut alerts: BTreeMap<String, Vec<_>> = BTreeMap::new();
    let mut n = 0usize;
    for (article, entry) in stream {
        if article.kind == Kind::Alert {
            for k in &article.keywords {
                alerts.entry(ticker_of(k).to_string()).or_default().push(article.timestamp);
            }
        }
        write_news(&mut news, [&article])?;
        write_ledger(&mut ledger, [&entry])?;
        n += 1;
    }
    news.flush()?;
    ledger.flush()?;

    let tickers: Vec<String> = (0..spec.n_keywords)
        .map(|i| ticker_of(&keyword_name(i)).to_string())
        .collect();
    let bars: Vec<Vec<MinuteBar>> = tickers
        .par_iter()
        .map(|t| gen_bars(spec, t, alerts.get(t).map(Vec::as_slice).unwrap_or(&[])))
        .collect::<Result<_, _>>()
        .map_err(validation)?;
    let bars: Vec<MinuteBar> = bars.into_iter().flatten().collect();
    write_bars(create(out.join("bars.csv"))?, &bars, Some(&config.provenance()))?;
    log::info!("synth: {n} articles, {} bars", bars.len());
    Ok(())
}
