use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use newspulse_core::corpus::{IdfScope, Kind, MILLIS_PER_MINUTE};
use newspulse_core::indicators::{ScoringConfig, SourceFilter, TopAggregation};
use newspulse_core::market::Measure;
use newspulse_core::similarity::{BinSpec, DEFAULT_PAIR_CAP, YEAR_MINUTES};
use newspulse_core::synthgen::SynthSpec;

use crate::error::CliError;

pub const SNAPSHOT_NAME: &str = "config.snapshot.toml";

/// Every run parameter. Unset keys take their defaults; the effective
/// values are written to the output directory as a snapshot that can be fed
/// back through `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub news: Option<PathBuf>,
    pub bars: Option<PathBuf>,
    /// Precomputed IDF table; built from `news` when absent.
    pub idf: Option<PathBuf>,
    /// Output directory. Not part of the snapshot, so a re-run may target a
    /// different directory and still reproduce the same bytes.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub keyword: Option<String>,
    pub kind: Option<String>,
    pub seed: u64,

    pub tau_days: f64,
    pub top_halfwidth_min: f64,
    pub idf_scope: String,
    pub top_aggregation: String,
    pub history_sources: String,

    /// Restrict auto-similarity pairs to one agency; pooled when absent.
    pub sa_agency: Option<String>,
    pub reference_agency: String,
    pub pair_cap: u64,
    pub sa_lo_min: f64,
    pub sa_hi_min: f64,
    pub sa_bins_per_decade: u32,
    pub sc_range_min: f64,
    pub sc_width_min: f64,
    pub power_lo_min: f64,
    pub power_hi_min: f64,

    pub lag_lo: i32,
    pub lag_hi: i32,
    pub window_lo: i32,
    pub window_hi: i32,
    pub fit_lo: i32,
    pub fit_hi: i32,
    pub preopen_to_open: bool,
    pub measures: Vec<String>,

    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            news: None,
            bars: None,
            idf: None,
            out: None,
            keyword: None,
            kind: None,
            seed: 1,
            tau_days: 7.0,
            top_halfwidth_min: 30.0,
            idf_scope: "global".into(),
            top_aggregation: "max".into(),
            history_sources: "all".into(),
            sa_agency: None,
            reference_agency: "RTRS".into(),
            pair_cap: DEFAULT_PAIR_CAP,
            sa_lo_min: 1.0,
            sa_hi_min: YEAR_MINUTES,
            sa_bins_per_decade: 10,
            sc_range_min: 120.0,
            sc_width_min: 1.0,
            power_lo_min: 1e2,
            power_hi_min: 1e5,
            lag_lo: -30,
            lag_hi: 90,
            window_lo: 0,
            window_hi: 3,
            fit_lo: 0,
            fit_hi: 60,
            preopen_to_open: false,
            measures: Measure::ALL.iter().map(|m| m.to_string()).collect(),
            synth: SynthSpec::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub keyword: Option<String>,
    pub kind: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path, overrides: Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = std::path::absolute(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        resolve(&base, &mut config.news);
        resolve(&base, &mut config.bars);
        resolve(&base, &mut config.idf);
        resolve(&base, &mut config.out);
        if let Some(k) = overrides.keyword {
            config.keyword = Some(k);
        }
        if let Some(k) = overrides.kind {
            config.kind = Some(k);
        }
        if let Some(out) = overrides.out {
            config.out = Some(std::path::absolute(&out).map_err(|e| CliError::Validation(e.to_string()))?);
        }
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        // one seed drives every stochastic stage
        config.synth.seed = config.seed;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        self.idf_scope()?;
        self.aggregation()?;
        self.kind_filter()?;
        self.measures()?;
        if !(self.tau_days > 0.0) || !(self.top_halfwidth_min >= 0.0) {
            return bad("tau_days must be positive and top_halfwidth_min non-negative".into());
        }
        if self.lag_lo > self.lag_hi || self.window_lo >= self.window_hi || self.fit_lo >= self.fit_hi {
            return bad("lag, window and fit ranges must be non-empty".into());
        }
        if !(self.sa_lo_min > 0.0 && self.sa_hi_min > self.sa_lo_min && self.sa_bins_per_decade > 0) {
            return bad("auto-similarity bins need 0 < sa_lo_min < sa_hi_min and sa_bins_per_decade > 0".into());
        }
        if !(self.sc_range_min > 0.0 && self.sc_width_min > 0.0) {
            return bad("sc_range_min and sc_width_min must be positive".into());
        }
        if !(self.power_lo_min > 0.0 && self.power_hi_min > self.power_lo_min) {
            return bad("power-law range needs 0 < power_lo_min < power_hi_min".into());
        }
        if self.pair_cap == 0 {
            return bad("pair_cap must be positive".into());
        }
        self.synth.validate().map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn out_dir(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Validation("no output directory: set `out` or pass --out".into()))
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, CliError> {
        let p = path
            .as_deref()
            .ok_or_else(|| CliError::Validation(format!("config key `{key}` is required for this command")))?;
        if !p.exists() {
            return Err(CliError::Validation(format!("{key} input {} does not exist", p.display())));
        }
        Ok(p)
    }

    pub fn idf_scope(&self) -> Result<IdfScope, CliError> {
        match self.idf_scope.as_str() {
            "global" => Ok(IdfScope::Global),
            "keyword" => match &self.keyword {
                Some(k) => Ok(IdfScope::Keyword(k.clone())),
                None => Err(CliError::Validation("idf_scope = \"keyword\" needs a keyword".into())),
            },
            other => Err(CliError::Validation(format!("idf_scope must be global or keyword, got {other:?}"))),
        }
    }

    pub fn aggregation(&self) -> Result<TopAggregation, CliError> {
        match self.top_aggregation.as_str() {
            "max" => Ok(TopAggregation::Max),
            "sum" => Ok(TopAggregation::Sum),
            other => Err(CliError::Validation(format!("top_aggregation must be max or sum, got {other:?}"))),
        }
    }

    pub fn kind_filter(&self) -> Result<Option<Kind>, CliError> {
        self.kind
            .as_deref()
            .map(|k| k.parse::<Kind>().map_err(|e| CliError::Validation(e.to_string())))
            .transpose()
    }

    pub fn measures(&self) -> Result<Vec<Measure>, CliError> {
        if self.measures.is_empty() {
            return Err(CliError::Validation("measures must not be empty".into()));
        }
        self.measures
            .iter()
            .map(|m| m.parse::<Measure>().map_err(CliError::Validation))
            .collect()
    }

    pub fn scoring(&self) -> Result<ScoringConfig, CliError> {
        let history_sources = if self.history_sources.trim() == "all" {
            SourceFilter::All
        } else {
            let set: BTreeSet<_> = self
                .history_sources
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(Into::into)
                .collect();
            if set.is_empty() {
                return Err(CliError::Validation("history_sources lists no agencies".into()));
            }
            SourceFilter::Only(set)
        };
        Ok(ScoringConfig {
            tau_millis: (self.tau_days * 24.0 * 60.0 * MILLIS_PER_MINUTE as f64).round() as i64,
            half_width_millis: (self.top_halfwidth_min * MILLIS_PER_MINUTE as f64).round() as i64,
            aggregation: self.aggregation()?,
            history_sources,
        })
    }

    pub fn auto_bins(&self) -> BinSpec {
        BinSpec::Log {
            lo: self.sa_lo_min,
            hi: self.sa_hi_min,
            per_decade: self.sa_bins_per_decade,
        }
    }

    pub fn cross_bins(&self) -> BinSpec {
        BinSpec::Linear {
            lo: -self.sc_range_min,
            hi: self.sc_range_min,
            width: self.sc_width_min,
        }
    }

    pub fn snapshot(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Provenance line shared by every CSV of a run.
    pub fn provenance(&self) -> String {
        let digest = Sha256::digest(self.snapshot().as_bytes());
        let hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("newspulse {} config={hash}", env!("CARGO_PKG_VERSION"))
    }
}
