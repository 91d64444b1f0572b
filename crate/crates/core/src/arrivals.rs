//! Arrival schedules, output-length sampling, and the closed-form overlap and
//! dispersion statistics used to interpret constant-interval and uniform-length
//! experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::request::{Millis, RequestId};
use crate::rng::SimRng;

/// `(request, arrival time)` pairs in non-decreasing time order.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSchedule {
    entries: Vec<(RequestId, Millis)>,
}

impl ArrivalSchedule {
    pub fn from_times(times: Vec<Millis>) -> Result<Self> {
        if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParam("arrival times must be finite and non-decreasing".into()));
        }
        Ok(Self { entries: times.into_iter().enumerate().map(|(i, t)| (RequestId(i as u32), t)).collect() })
    }

    pub fn entries(&self) -> &[(RequestId, Millis)] {
        &self.entries
    }

    pub fn times(&self) -> impl Iterator<Item = Millis> + '_ {
        self.entries.iter().map(|&(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Gaps between consecutive arrivals.
    pub fn intervals(&self) -> Vec<Millis> {
        self.entries.windows(2).map(|w| w[1].1 - w[0].1).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LengthDistribution {
    Fixed { tokens: u32 },
    Uniform { min: u32, max: u32 },
}

impl LengthDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LengthDistribution::Fixed { tokens: 0 } => Err(Error::InvalidParam("fixed length must be positive".into())),
            LengthDistribution::Uniform { min, max } if min == 0 || min > max => {
                Err(Error::InvalidParam(format!("uniform lengths need 0 < min <= max, got [{min}, {max}]")))
            }
            _ => Ok(()),
        }
    }

    pub fn upper_bound(&self) -> u32 {
        match *self {
            LengthDistribution::Fixed { tokens } => tokens,
            LengthDistribution::Uniform { max, .. } => max,
        }
    }
}

pub fn constant_schedule(n: usize, interval: Millis, start: Millis) -> Result<ArrivalSchedule> {
    if n == 0 {
        return Err(Error::InvalidParam("schedule needs at least one request".into()));
    }
    if !(interval >= 0.0) || !interval.is_finite() {
        return Err(Error::InvalidParam(format!("interval must be >= 0, got {interval}")));
    }
    ArrivalSchedule::from_times((0..n).map(|i| start + i as f64 * interval).collect())
}

/// First arrival at `start`; every later gap is exponential with mean `mean_interval`.
pub fn poisson_schedule(n: usize, mean_interval: Millis, seed: u64, start: Millis) -> Result<ArrivalSchedule> {
    if n == 0 {
        return Err(Error::InvalidParam("schedule needs at least one request".into()));
    }
    if !(mean_interval > 0.0) || !mean_interval.is_finite() {
        return Err(Error::InvalidParam(format!("mean interval must be > 0, got {mean_interval}")));
    }
    let mut rng = SimRng::new(seed);
    let mut times = Vec::with_capacity(n);
    let mut t = start;
    times.push(t);
    for _ in 1..n {
        t += rng.exponential(mean_interval);
        times.push(t);
    }
    ArrivalSchedule::from_times(times)
}

pub fn sample_output_lengths(n: usize, dist: LengthDistribution, seed: u64) -> Result<Vec<u32>> {
    if n == 0 {
        return Err(Error::InvalidParam("need at least one length".into()));
    }
    dist.validate()?;
    Ok(match dist {
        LengthDistribution::Fixed { tokens } => vec![tokens; n],
        LengthDistribution::Uniform { min, max } => {
            let mut rng = SimRng::new(seed);
            (0..n).map(|_| rng.uniform_inclusive(min as u64, max as u64) as u32).collect()
        }
    })
}

/// Temporally overlapped fraction of two consecutive requests that each take
/// `request_ms` and arrive `interval` apart.
pub fn overlap_ratio(request_ms: Millis, interval: Millis) -> Result<f64> {
    if !(request_ms > 0.0) {
        return Err(Error::InvalidParam(format!("request time must be > 0, got {request_ms}")));
    }
    if !(interval >= 0.0) {
        return Err(Error::InvalidParam(format!("interval must be >= 0, got {interval}")));
    }
    if request_ms > interval {
        Ok((request_ms - interval) / (request_ms + interval))
    } else {
        Ok(0.0)
    }
}

/// Standard deviation of the continuous uniform distribution on `[a, b]`.
pub fn uniform_std(a: f64, b: f64) -> Result<f64> {
    if a > b {
        return Err(Error::InvalidParam(format!("need a <= b, got [{a}, {b}]")));
    }
    Ok((b - a) / 12f64.sqrt())
}
