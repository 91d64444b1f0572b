use serde::{Deserialize, Serialize};

use crate::arrivals::{constant_schedule, poisson_schedule, ArrivalSchedule, LengthDistribution};
use crate::baselines::{run_concurrent_instances, run_dynamic_batching, BatchWindowConfig};
use crate::cost::{CostParams, TpConfig};
use crate::engine::{run_fusion, Compaction};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, Metrics};
use crate::request::Millis;
use crate::trace::{Discipline, Trace};
use crate::workload::Workload;

/// Mixed into the seed for output-length sampling so lengths and arrivals
/// come from independent streams.
const LENGTH_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalSpec {
    Constant { interval_ms: Millis },
    Poisson { mean_interval_ms: Millis },
}

impl ArrivalSpec {
    pub fn schedule(&self, n: usize, seed: u64) -> Result<ArrivalSchedule> {
        match *self {
            ArrivalSpec::Constant { interval_ms } => constant_schedule(n, interval_ms, 0.0),
            ArrivalSpec::Poisson { mean_interval_ms } => poisson_schedule(n, mean_interval_ms, seed, 0.0),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ArrivalSpec::Constant { .. } => "constant",
            ArrivalSpec::Poisson { .. } => "poisson",
        }
    }

    pub fn interval_ms(&self) -> Millis {
        match *self {
            ArrivalSpec::Constant { interval_ms } => interval_ms,
            ArrivalSpec::Poisson { mean_interval_ms } => mean_interval_ms,
        }
    }
}

/// One discipline over one workload family; `seed` picks the instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub discipline: Discipline,
    pub n_requests: usize,
    pub arrival: ArrivalSpec,
    pub lengths: LengthDistribution,
    pub max_output_length: Option<u32>,
    pub batch_size: u32,
    pub tp: TpConfig,
    pub batch_window: BatchWindowConfig,
    pub params: CostParams,
}

impl Scenario {
    pub fn new(name: impl Into<String>, discipline: Discipline, n_requests: usize, arrival: ArrivalSpec) -> Self {
        Self {
            name: name.into(),
            discipline,
            n_requests,
            arrival,
            lengths: LengthDistribution::Fixed { tokens: 512 },
            max_output_length: None,
            batch_size: 1,
            tp: TpConfig::single(),
            batch_window: BatchWindowConfig::default(),
            params: CostParams::default(),
        }
    }

    pub fn with_lengths(mut self, lengths: LengthDistribution) -> Self {
        self.lengths = lengths;
        self
    }

    pub fn with_tp(mut self, tp: TpConfig) -> Self {
        self.tp = tp;
        self
    }

    pub fn with_params(mut self, params: CostParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_discipline(mut self, discipline: Discipline) -> Self {
        self.discipline = discipline;
        self
    }

    pub fn with_batch_window(mut self, batch_window: BatchWindowConfig) -> Self {
        self.batch_window = batch_window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |e: Error| Error::Config(format!("scenario '{}': {}", self.name, strip(&e)));
        if self.n_requests == 0 {
            return Err(Error::Config(format!("scenario '{}': n_requests must be >= 1", self.name)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config(format!("scenario '{}': batch_size must be >= 1", self.name)));
        }
        if self.max_output_length == Some(0) {
            return Err(Error::Config(format!("scenario '{}': max_output_length must be >= 1", self.name)));
        }
        self.lengths.validate().map_err(ctx)?;
        self.params.validate().map_err(ctx)?;
        self.tp.validate().map_err(ctx)?;
        self.batch_window.validate().map_err(ctx)?;
        // parameter checks only; the seed does not matter here
        self.arrival.schedule(1, 0).map_err(ctx)?;
        Ok(())
    }

    pub fn workload(&self, seed: u64) -> Result<Workload> {
        let schedule = self.arrival.schedule(self.n_requests, seed)?;
        Workload::generate(&schedule, self.lengths, self.max_output_length, self.batch_size, seed ^ LENGTH_STREAM)
    }

    pub fn run(&self, seed: u64) -> Result<Trace> {
        let w = self.workload(seed)?;
        match self.discipline {
            Discipline::Fusion => run_fusion(&w, &self.params, &self.tp, Compaction::Shuffle),
            Discipline::FusionNoShuffle => run_fusion(&w, &self.params, &self.tp, Compaction::None),
            Discipline::FusionTrimOnly => run_fusion(&w, &self.params, &self.tp, Compaction::TrimOnly),
            Discipline::DynamicBatching => run_dynamic_batching(&w, &self.params, &self.tp, &self.batch_window),
            Discipline::ConcurrentInstances => run_concurrent_instances(&w, &self.params, &self.tp),
        }
    }

    pub fn evaluate(&self, seed: u64) -> Result<Metrics> {
        compute_metrics(&self.run(seed)?, self.n_requests)
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Config(m) | Error::InvalidParam(m) => m.clone(),
        other => other.to_string(),
    }
}
