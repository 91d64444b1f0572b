//! Fits the contention coefficient so the concurrent-instance baseline
//! reproduces a reference speedup over fusion.

use super::scenario::{ArrivalSpec, Scenario};
use crate::arrivals::LengthDistribution;
use crate::cost::{CostParams, ANCHOR_REQUEST_MS, ANCHOR_TOKENS};
use crate::error::{Error, Result};
use crate::trace::Discipline;

/// Reference points the cost model is fitted to.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchors {
    /// Solo end-to-end time of one request generating `tokens` tokens.
    pub single_request_ms: f64,
    pub tokens: u32,
    /// Target concurrent/fusion makespan ratio.
    pub speedup_target: f64,
    pub arrival: ArrivalSpec,
    pub n_requests: usize,
    pub seeds: Vec<u64>,
    /// Relative tolerance on the achieved speedup.
    pub tolerance: f64,
    pub gamma_max: f64,
}

impl Default for Anchors {
    fn default() -> Self {
        Self {
            single_request_ms: ANCHOR_REQUEST_MS,
            tokens: ANCHOR_TOKENS,
            speedup_target: 11.2,
            arrival: ArrivalSpec::Poisson { mean_interval_ms: 20.0 },
            n_requests: 32,
            seeds: (0..20).collect(),
            tolerance: 0.05,
            gamma_max: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub params: CostParams,
    pub gamma: f64,
    pub achieved_speedup: f64,
}

/// Mean over seeds of concurrent makespan divided by fusion makespan.
pub fn speedup(params: &CostParams, anchors: &Anchors) -> Result<f64> {
    if anchors.seeds.is_empty() {
        return Err(Error::InvalidParam("calibration needs at least one seed".into()));
    }
    let fusion = Scenario::new("calibration", Discipline::Fusion, anchors.n_requests, anchors.arrival)
        .with_lengths(LengthDistribution::Fixed { tokens: anchors.tokens })
        .with_params(*params);
    let concurrent = fusion.clone().with_discipline(Discipline::ConcurrentInstances);
    let mut total = 0.0;
    for &seed in &anchors.seeds {
        total += concurrent.evaluate(seed)?.makespan / fusion.evaluate(seed)?.makespan;
    }
    Ok(total / anchors.seeds.len() as f64)
}

/// Sets the per-iteration base from the single-request anchor, then bisects
/// `contention_gamma` on `[0, gamma_max]`. The ratio grows with gamma.
pub fn calibrate(anchors: &Anchors, base: &CostParams) -> Result<Calibration> {
    if !(anchors.single_request_ms > 0.0) || anchors.tokens == 0 || !(anchors.speedup_target > 0.0) {
        return Err(Error::InvalidParam("anchors must be positive".into()));
    }
    let mut params = *base;
    params.base_iteration_ms = anchors.single_request_ms / anchors.tokens as f64;
    params.preprocess_ms = params.base_iteration_ms;
    params.validate()?;

    let target = anchors.speedup_target;
    let within = |s: f64| ((s - target) / target).abs() <= anchors.tolerance;
    let at = |gamma: f64| -> Result<f64> {
        let mut p = params;
        p.contention_gamma = gamma;
        speedup(&p, anchors)
    };
    let finish = |gamma: f64, s: f64| {
        let mut p = params;
        p.contention_gamma = gamma;
        Calibration { params: p, gamma, achieved_speedup: s }
    };

    let (mut lo, mut hi) = (0.0, anchors.gamma_max);
    let (s_lo, s_hi) = (at(lo)?, at(hi)?);
    if within(s_lo) && s_lo >= target {
        return Ok(finish(lo, s_lo));
    }
    if s_lo > target || s_hi < target {
        if within(s_hi) {
            return Ok(finish(hi, s_hi));
        }
        return Err(Error::CalibrationFailed(format!(
            "speedup target {target} outside reachable range [{s_lo:.3}, {s_hi:.3}] for gamma in [0, {}]",
            anchors.gamma_max
        )));
    }
    let mut best = if (s_lo - target).abs() < (s_hi - target).abs() { (lo, s_lo) } else { (hi, s_hi) };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let s = at(mid)?;
        if (s - target).abs() < (best.1 - target).abs() {
            best = (mid, s);
        }
        if (s - target).abs() <= 1e-6 * target || hi - lo < 1e-9 {
            break;
        }
        if s < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !within(best.1) {
        return Err(Error::CalibrationFailed(format!(
            "closest speedup {:.3} at gamma {:.4} misses target {target}",
            best.1, best.0
        )));
    }
    Ok(finish(best.0, best.1))
}
