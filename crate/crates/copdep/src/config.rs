//! Pipeline configuration: one JSON document, relative paths resolved
//! against the config file's directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use copdep_core::copula::Family;
use copdep_core::localdep::{quantile_grid, DEFAULT_MC_N, DEFAULT_MIN_COUNT};
use copdep_core::marginal::MarginalSpec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::read_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesInput {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_date_column")]
    pub date_column: String,
    #[serde(default = "default_value_column")]
    pub value_column: String,
}

fn default_date_column() -> String {
    "date".into()
}

fn default_value_column() -> String {
    "price".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarginalConfig {
    pub spec: MarginalSpec,
    /// Pick the AIC-best order from the standard search grid instead of `spec`.
    pub select_order: bool,
    pub diagnostic_lags: usize,
}

impl Default for MarginalConfig {
    fn default() -> Self {
        Self {
            spec: MarginalSpec::default(),
            select_order: false,
            diagnostic_lags: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RollingConfig {
    pub family: Family,
    pub window: usize,
    pub step: usize,
    /// Cold-started windows fitted concurrently.
    pub parallel: bool,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            family: Family::Mix3,
            window: 500,
            step: 1,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub series: Vec<SeriesInput>,
    /// Root seed for every stochastic stage.
    pub seed: u64,
    #[serde(default)]
    pub marginal: MarginalConfig,
    #[serde(default = "default_candidates")]
    pub candidates: Vec<Family>,
    #[serde(default)]
    pub rolling: RollingConfig,
    #[serde(default = "default_mc_n")]
    pub mc_n: usize,
    #[serde(default = "default_step")]
    pub grid_step: f64,
    #[serde(default = "default_step")]
    pub diagonal_step: f64,
    #[serde(default = "default_min_count")]
    pub min_count: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_candidates() -> Vec<Family> {
    Family::CANDIDATES.to_vec()
}

fn default_mc_n() -> usize {
    DEFAULT_MC_N
}

fn default_step() -> f64 {
    0.05
}

fn default_min_count() -> usize {
    DEFAULT_MIN_COUNT
}

fn default_output_dir() -> PathBuf {
    "out".into()
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::Validation(format!("config file {} not found", path.display())));
        }
        let mut cfg: PipelineConfig = read_json(path).map_err(|e| match e {
            Error::Json { path, source } => Error::Validation(format!("{}: {source}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut cfg.series {
            if s.path.is_relative() {
                s.path = base.join(&s.path);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.series.len() < 2 {
            return bad("at least two series are required".into());
        }
        let mut names = BTreeSet::new();
        for s in &self.series {
            let valid = !s.name.is_empty()
                && s.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
            if !valid {
                return bad(format!("series name {:?} must be non-empty [A-Za-z0-9_.]", s.name));
            }
            if !names.insert(&s.name) {
                return bad(format!("duplicate series name {:?}", s.name));
            }
            if !s.path.is_file() {
                return bad(format!("input file {} not found", s.path.display()));
            }
        }
        self.marginal.spec.validate()?;
        if self.candidates.is_empty() {
            return bad("candidate list is empty".into());
        }
        if self.rolling.window < copdep_core::fitting::MIN_FIT_LEN || self.rolling.step == 0 {
            return bad("rolling window must be >= 100 and step >= 1".into());
        }
        if self.mc_n == 0 || self.min_count < 2 {
            return bad("mc_n must be >= 1 and min_count >= 2".into());
        }
        quantile_grid(self.grid_step)?;
        quantile_grid(self.diagonal_step)?;
        Ok(())
    }

    pub fn series_index(&self, name: &str) -> Result<usize> {
        self.series
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::Validation(format!("unknown series {name:?}")))
    }

    /// All unordered pairs in config order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.series.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }

    pub fn pair_name(&self, i: usize, j: usize) -> String {
        format!("{}-{}", self.series[i].name, self.series[j].name)
    }

    /// Resolves `"A-B"` to a configured pair.
    pub fn find_pair(&self, label: &str) -> Result<(usize, usize)> {
        self.pairs()
            .into_iter()
            .find(|&(i, j)| self.pair_name(i, j) == label)
            .ok_or_else(|| Error::Validation(format!("unknown pair {label:?}")))
    }
}
