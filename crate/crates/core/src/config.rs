//! Run configuration: one JSON document describing the model, the studies
//! to assess and the estimator settings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::VoiError;
use crate::implementation::{CurrentShares, MarketShareFunction};
use crate::mm::MmSettings;
use crate::psa::{DecisionModel, FixedParams, PriorSpec};
use crate::studies::StudyDesign;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config field `{field}`: {reason}")]
    Field { field: String, reason: String },
}

impl ConfigError {
    fn field(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Field { field: field.into(), reason: reason.into() }
    }
}

impl From<VoiError> for ConfigError {
    fn from(e: VoiError) -> Self {
        match e {
            VoiError::InvalidArgument { name, reason } => ConfigError::field(name, reason),
            other => ConfigError::field("model", other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Nmc,
    Mm,
    #[default]
    Both,
}

impl MethodChoice {
    pub fn runs_nmc(self) -> bool {
        matches!(self, MethodChoice::Nmc | MethodChoice::Both)
    }

    pub fn runs_mm(self) -> bool {
        matches!(self, MethodChoice::Mm | MethodChoice::Both)
    }
}

impl std::str::FromStr for MethodChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nmc" => Ok(MethodChoice::Nmc),
            "mm" => Ok(MethodChoice::Mm),
            "both" => Ok(MethodChoice::Both),
            other => Err(format!("unknown method `{other}` (expected nmc, mm or both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub priors: PriorSpec,
    pub fixed: FixedParams,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { priors: PriorSpec::case_study(), fixed: FixedParams::case_study() }
    }
}

fn default_studies() -> Vec<StudyDesign> {
    (1..=3).filter_map(StudyDesign::case_study).collect()
}
fn default_s() -> usize {
    5_000
}
fn default_psa_size() -> usize {
    10_000
}
fn default_r() -> usize {
    10_000
}
fn default_q() -> usize {
    50
}
fn default_seed() -> u64 {
    1
}
fn default_current() -> CurrentShares {
    CurrentShares::all_on(0, 2)
}
fn default_output() -> PathBuf {
    PathBuf::from("voi-output")
}
fn default_true() -> bool {
    true
}
fn default_bootstrap() -> usize {
    MmSettings::default().bootstrap
}

/// Everything a run needs. Omitted fields take the worked-example values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default = "default_studies")]
    pub studies: Vec<StudyDesign>,
    #[serde(default)]
    pub method: MethodChoice,
    /// Outer simulations for nested Monte Carlo.
    #[serde(rename = "S", default = "default_s")]
    pub s: usize,
    /// Prior draws behind the current-decision value and the moment
    /// matching regression.
    #[serde(default = "default_psa_size")]
    pub psa_size: usize,
    /// Posterior draws per nested dataset.
    #[serde(rename = "R", default = "default_r")]
    pub r: usize,
    /// Quantile datasets for moment matching.
    #[serde(rename = "Q", default = "default_q")]
    pub q: usize,
    /// Sample sizes for the across-sample-size estimates (moment matching).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    /// Sample-size range spanned by the quantile datasets when `n_grid` is
    /// set; defaults per study to `[ceil(n/4), 4n]` widened to cover the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_range: Option<(usize, usize)>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "MarketShareFunction::case_study")]
    pub market_share: MarketShareFunction,
    #[serde(default = "default_current")]
    pub current_shares: CurrentShares,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Bootstrap replicates for the moment matching standard error.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Write wall-clock seconds to `results.csv`; `false` writes `NA` so
    /// repeated runs produce identical files.
    #[serde(default = "default_true")]
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.priors.validate()?;
        self.model.fixed.validate()?;
        for (name, v) in [("S", self.s), ("psa_size", self.psa_size), ("R", self.r), ("Q", self.q)] {
            if v == 0 {
                return Err(ConfigError::field(name, "must be positive"));
            }
        }
        for (name, v) in [("S", self.s), ("psa_size", self.psa_size), ("R", self.r)] {
            if v < 2 {
                return Err(ConfigError::field(name, "must be at least 2"));
            }
        }
        if self.method.runs_mm() && self.q < 5 {
            return Err(ConfigError::field("Q", "moment matching needs at least 5 quantile datasets"));
        }
        if self.studies.is_empty() {
            return Err(ConfigError::field("studies", "at least one study is required"));
        }
        if let Some(i) = self.studies.iter().position(|d| d.n == 0) {
            return Err(ConfigError::field(&format!("studies[{i}].n"), "must be positive"));
        }
        self.market_share.validate(self.current_shares.m.len())?;
        self.current_shares.validate()?;
        if self.current_shares.m.len() != 2 {
            return Err(ConfigError::field("current_shares", "the decision model has two treatments"));
        }
        if let Some(grid) = &self.n_grid {
            if grid.contains(&0) {
                return Err(ConfigError::field("n_grid", "sample sizes must be positive"));
            }
            if let Some((lo, hi)) = self.n_range {
                if lo == 0 || hi <= lo {
                    return Err(ConfigError::field("n_range", "need 1 <= min < max"));
                }
                if let Some(n) = grid.iter().find(|n| !(lo..=hi).contains(*n)) {
                    return Err(ConfigError::field("n_grid", format!("{n} outside n_range [{lo}, {hi}]")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn decision_model(&self) -> DecisionModel {
        DecisionModel::two_treatment(self.model.fixed).expect("two net-benefit functions")
    }

    pub fn mm_settings(&self) -> MmSettings {
        MmSettings { q: self.q, r: self.r, bootstrap: self.bootstrap }
    }

    /// Range of sizes the across-sample-size quantile datasets span.
    pub fn n_range_for(&self, design: &StudyDesign) -> (usize, usize) {
        if let Some(range) = self.n_range {
            return range;
        }
        let grid = self.n_grid.as_deref().unwrap_or(&[]);
        let lo = grid.iter().copied().chain([design.n.div_ceil(4)]).min().unwrap_or(1).max(1);
        let hi = grid.iter().copied().chain([4 * design.n]).max().unwrap_or(lo + 1).max(lo + 1);
        (lo, hi)
    }

    /// SHA-256 of the compact serialization with `output_dir` blanked;
    /// neither file formatting nor output location affects it.
    pub fn hash(&self) -> String {
        let keyed = RunConfig { output_dir: PathBuf::new(), ..self.clone() };
        let digest = Sha256::digest(serde_json::to_vec(&keyed).expect("config serializes"));
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Read, parse and validate a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    RunConfig::from_json(&text)
}
