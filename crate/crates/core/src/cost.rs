//! Parametric timing model: per-iteration compute, tensor-parallel collectives,
//! contention between concurrent instances, and shuffle copies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::request::Millis;

/// Solo single-request runtime the default calibration is anchored to.
pub const ANCHOR_REQUEST_MS: f64 = 6000.0;
/// Tokens generated by the anchor request.
pub const ANCHOR_TOKENS: u32 = 512;

/// Collectives issued per iteration: two allreduce and one allgather.
pub const COLLECTIVES_PER_ITERATION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    /// One iteration of a single request on one device.
    pub base_iteration_ms: f64,
    /// Extra time per resident request beyond `capacity`.
    pub marginal_per_request_ms: f64,
    /// Requests the hardware absorbs at no marginal cost.
    pub capacity: u32,
    pub preprocess_ms: f64,
    pub alpha_intra: f64,
    pub beta_intra: f64,
    pub alpha_inter: f64,
    pub beta_inter: f64,
    /// ms per byte copied during a shuffle.
    pub memcpy_beta: f64,
    /// Slowdown per extra concurrently running instance.
    pub contention_gamma: f64,
    /// Buffer bytes per batch element; a request's tensor size is this times its batch size.
    pub bytes_per_sequence: u64,
}

impl Default for CostParams {
    fn default() -> Self {
        let base = ANCHOR_REQUEST_MS / ANCHOR_TOKENS as f64;
        Self {
            base_iteration_ms: base,
            marginal_per_request_ms: 0.8,
            capacity: 4,
            preprocess_ms: base,
            alpha_intra: 0.02,
            beta_intra: 1.25e-7,
            alpha_inter: 0.05,
            beta_inter: 2.0e-7,
            memcpy_beta: 1.0e-9,
            contention_gamma: 1.0,
            bytes_per_sequence: 64 << 20,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("base_iteration_ms", self.base_iteration_ms),
            ("marginal_per_request_ms", self.marginal_per_request_ms),
            ("preprocess_ms", self.preprocess_ms),
            ("alpha_intra", self.alpha_intra),
            ("beta_intra", self.beta_intra),
            ("alpha_inter", self.alpha_inter),
            ("beta_inter", self.beta_inter),
            ("memcpy_beta", self.memcpy_beta),
            ("contention_gamma", self.contention_gamma),
        ];
        for (name, v) in reals {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.capacity == 0 {
            return Err(Error::InvalidParam("capacity must be >= 1".into()));
        }
        if self.bytes_per_sequence == 0 {
            return Err(Error::InvalidParam("bytes_per_sequence must be >= 1".into()));
        }
        Ok(())
    }

    pub fn tensor_size(&self, batch_size: u32) -> u64 {
        self.bytes_per_sequence * batch_size as u64
    }

    /// Duration of one iteration over `active` resident requests whose window spans `live_bytes`.
    pub fn iteration_time(&self, active: usize, live_bytes: u64, tp: &TpConfig) -> Result<Millis> {
        if active == 0 {
            return Err(Error::InvalidParam("iteration needs at least one resident request".into()));
        }
        let over = active.saturating_sub(self.capacity as usize) as f64;
        let compute = self.base_iteration_ms + self.marginal_per_request_ms * over;
        if tp.tp_size > 1 {
            Ok(compute + self.comm_time(live_bytes / tp.tp_size as u64, tp)?)
        } else {
            Ok(compute)
        }
    }

    /// Per-iteration collective time for one communicator: each of the three
    /// collectives pays `alpha + beta * bytes`.
    pub fn comm_time(&self, message_bytes: u64, tp: &TpConfig) -> Result<Millis> {
        if tp.tp_size < 2 {
            return Err(Error::InvalidParam("collectives need tp_size >= 2".into()));
        }
        let (alpha, beta) = match tp.placement {
            Placement::Intra => (self.alpha_intra, self.beta_intra),
            Placement::Inter => (self.alpha_inter, self.beta_inter),
        };
        Ok(COLLECTIVES_PER_ITERATION * (alpha + beta * message_bytes as f64))
    }

    pub fn contention_factor(&self, instances: usize) -> Result<f64> {
        if instances == 0 {
            return Err(Error::InvalidParam("contention needs at least one instance".into()));
        }
        Ok(1.0 + self.contention_gamma * (instances - 1) as f64)
    }

    pub fn shuffle_time(&self, bytes_moved: u64) -> Millis {
        self.memcpy_beta * bytes_moved as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    #[default]
    Intra,
    Inter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TpConfig {
    #[serde(rename = "size")]
    pub tp_size: u32,
    #[serde(default)]
    pub placement: Placement,
}

impl Default for TpConfig {
    fn default() -> Self {
        Self::single()
    }
}

impl TpConfig {
    pub fn single() -> Self {
        Self { tp_size: 1, placement: Placement::Intra }
    }

    pub fn new(tp_size: u32, placement: Placement) -> Self {
        Self { tp_size, placement }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tp_size == 0 {
            return Err(Error::InvalidParam("tp_size must be >= 1".into()));
        }
        Ok(())
    }
}
