//! Suite configuration file.
//!
//! ```toml
//! seeds = [0, 1, 2, 3, 4]
//! cost_file = "params.toml"        # optional, relative to this file
//!
//! [cost]                           # optional overrides on top of cost_file/defaults
//! contention_gamma = 1.0
//!
//! [[scenario]]
//! name = "tau500"
//! disciplines = ["fusion", "concurrent_instances"]
//! n_requests = 8
//! arrival = { kind = "constant", interval_ms = 500.0 }
//! lengths = { kind = "fixed", tokens = 512 }
//! max_output_length = 512          # optional; defaults to each sampled length
//! batch_size = 1                   # optional
//! tp = { size = 2, placement = "intra" }                 # optional
//! batch_window = { window_ms = 500.0, max_batch = 32 }   # optional
//! cost = { marginal_per_request_ms = 0.5 }               # optional
//! ```
//!
//! Unknown keys anywhere are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scenario::{ArrivalSpec, Scenario};
use crate::arrivals::LengthDistribution;
use crate::baselines::BatchWindowConfig;
use crate::cost::{CostParams, TpConfig};
use crate::error::{Error, Result};
use crate::trace::Discipline;

/// Partial [`CostParams`]; set fields replace the inherited value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostOverrides {
    pub base_iteration_ms: Option<f64>,
    pub marginal_per_request_ms: Option<f64>,
    pub capacity: Option<u32>,
    pub preprocess_ms: Option<f64>,
    pub alpha_intra: Option<f64>,
    pub beta_intra: Option<f64>,
    pub alpha_inter: Option<f64>,
    pub beta_inter: Option<f64>,
    pub memcpy_beta: Option<f64>,
    pub contention_gamma: Option<f64>,
    pub bytes_per_sequence: Option<u64>,
}

impl CostOverrides {
    pub fn apply(&self, mut p: CostParams) -> CostParams {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = v; } )* };
        }
        set!(
            base_iteration_ms,
            marginal_per_request_ms,
            capacity,
            preprocess_ms,
            alpha_intra,
            beta_intra,
            alpha_inter,
            beta_inter,
            memcpy_beta,
            contention_gamma,
            bytes_per_sequence
        );
        p
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTable {
    pub name: String,
    pub disciplines: Vec<Discipline>,
    pub n_requests: usize,
    pub arrival: ArrivalSpec,
    pub lengths: LengthDistribution,
    pub max_output_length: Option<u32>,
    #[serde(default = "one")]
    pub batch_size: u32,
    #[serde(default)]
    pub tp: TpConfig,
    #[serde(default)]
    pub batch_window: BatchWindowConfig,
    #[serde(default)]
    pub cost: CostOverrides,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    seeds: Vec<u64>,
    cost_file: Option<PathBuf>,
    #[serde(default)]
    cost: CostOverrides,
    #[serde(rename = "scenario", default)]
    scenarios: Vec<ScenarioTable>,
}

/// Parameter file written by calibration and read through `cost_file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub cost: CostParams,
}

impl ParamFile {
    pub fn parse(text: &str) -> Result<CostParams> {
        let file: ParamFile = toml::from_str(text).map_err(|e| Error::Config(format!("parameter file: {e}")))?;
        file.cost.validate().map_err(|e| Error::Config(format!("parameter file: {e}")))?;
        Ok(file.cost)
    }

    pub fn load(path: &Path) -> Result<CostParams> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn render(params: &CostParams) -> String {
        toml::to_string(&ParamFile { cost: *params }).expect("cost params serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seeds: Vec<u64>,
    pub scenarios: Vec<Scenario>,
}

impl SuiteConfig {
    /// Parses a suite. `base_dir` resolves a relative `cost_file`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let raw: RawSuite = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if raw.seeds.is_empty() {
            return Err(Error::Config("`seeds` must list at least one seed".into()));
        }
        let base = match &raw.cost_file {
            Some(p) => {
                let path = match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p.clone(),
                };
                ParamFile::load(&path)?
            }
            None => CostParams::default(),
        };
        let global = raw.cost.apply(base);

        let mut scenarios = Vec::new();
        for (idx, table) in raw.scenarios.iter().enumerate() {
            if table.disciplines.is_empty() {
                return Err(Error::Config(format!("scenario[{idx}] '{}': `disciplines` is empty", table.name)));
            }
            if raw.scenarios[..idx].iter().any(|t| t.name == table.name) {
                return Err(Error::Config(format!("scenario[{idx}]: duplicate name '{}'", table.name)));
            }
            for &discipline in &table.disciplines {
                let scenario = Scenario {
                    name: table.name.clone(),
                    discipline,
                    n_requests: table.n_requests,
                    arrival: table.arrival,
                    lengths: table.lengths,
                    max_output_length: table.max_output_length,
                    batch_size: table.batch_size,
                    tp: table.tp,
                    batch_window: table.batch_window,
                    params: table.cost.apply(global),
                };
                scenario.validate()?;
                scenarios.push(scenario);
            }
        }
        if scenarios.is_empty() {
            return Err(Error::Config("config defines no [[scenario]] tables".into()));
        }
        Ok(Self { seeds: raw.seeds, scenarios })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent()).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
