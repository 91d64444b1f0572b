//! Requests, their five-phase lifecycle, and per-request runtime bookkeeping.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simulated wall-clock time in milliseconds.
pub type Millis = f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestId(pub u32);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One inference task as submitted to the server.
///
/// `actual_output_length` is the iteration at which the end-of-sequence token
/// appears. It is drawn when the workload is generated; the simulator never
/// models token content.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: RequestId,
    pub batch_size: u32,
    pub input_len: u32,
    pub max_output_length: u32,
    pub actual_output_length: u32,
    pub arrival_time: Millis,
}

impl Request {
    pub fn new(id: u32, arrival_time: Millis, max_output_length: u32) -> Self {
        Self {
            id: RequestId(id),
            batch_size: 1,
            input_len: 8,
            max_output_length,
            actual_output_length: max_output_length,
            arrival_time,
        }
    }

    pub fn with_eos_at(mut self, eos_at: u32) -> Self {
        self.actual_output_length = eos_at;
        self
    }

    pub fn with_batch_size(mut self, batch_size: u32) -> Self {
        self.batch_size = batch_size;
        self
    }

    /// Number of tokens the request emits before it leaves the stream.
    pub fn tokens_to_generate(&self) -> u32 {
        self.actual_output_length.min(self.max_output_length)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParam(format!("request {}: batch_size must be >= 1", self.id)));
        }
        if self.input_len == 0 {
            return Err(Error::InvalidParam(format!("request {}: input_len must be >= 1", self.id)));
        }
        if self.actual_output_length == 0 || self.actual_output_length > self.max_output_length {
            return Err(Error::InvalidParam(format!(
                "request {}: need 1 <= actual_output_length ({}) <= max_output_length ({})",
                self.id, self.actual_output_length, self.max_output_length
            )));
        }
        if !(self.arrival_time >= 0.0) || !self.arrival_time.is_finite() {
            return Err(Error::InvalidParam(format!("request {}: arrival_time must be finite and >= 0", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Received,
    Preprocessing,
    ReadyForFusion,
    Running,
    Finished,
}

impl Phase {
    pub fn successor(self) -> Option<Phase> {
        match self {
            Phase::Received => Some(Phase::Preprocessing),
            Phase::Preprocessing => Some(Phase::ReadyForFusion),
            Phase::ReadyForFusion => Some(Phase::Running),
            Phase::Running => Some(Phase::Finished),
            Phase::Finished => None,
        }
    }
}

/// Moves a request one step along the lifecycle chain.
///
/// Anything other than the immediate successor is an engine bug.
pub fn advance_phase(current: Phase, target: Phase) -> Result<Phase> {
    if current.successor() == Some(target) {
        Ok(target)
    } else {
        Err(Error::IllegalTransition { from: current, to: target })
    }
}

/// Informational device tag; never branched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeviceType {
    #[default]
    Gpu,
    Cpu,
}

/// Slot offset used while a request is not resident in the buffer.
pub const UNFUSED: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeInfo {
    pub request_id: RequestId,
    pub memory_offset: usize,
    pub tensor_size: u64,
    pub device_type: DeviceType,
    pub max_output_length: u32,
    pub current_iteration: u32,
}

impl RuntimeInfo {
    pub fn new(request_id: RequestId, tensor_size: u64, max_output_length: u32) -> Self {
        Self {
            request_id,
            memory_offset: UNFUSED,
            tensor_size,
            device_type: DeviceType::default(),
            max_output_length,
            current_iteration: 0,
        }
    }

    pub fn is_fused(&self) -> bool {
        self.memory_offset != UNFUSED
    }
}

/// Records one generated token. Returns the updated info and whether the
/// request has now finished, either at its EOS iteration or at the length cap.
pub fn record_token(info: &RuntimeInfo, eos_at: u32) -> Result<(RuntimeInfo, bool)> {
    let stop_at = eos_at.min(info.max_output_length);
    if info.current_iteration >= info.max_output_length || info.current_iteration >= stop_at {
        return Err(Error::AlreadyFinished(info.request_id));
    }
    let mut next = info.clone();
    next.current_iteration += 1;
    let finished = next.current_iteration == stop_at;
    Ok((next, finished))
}

/// Output of pre-processing: the request is ready to be fused at `ready_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub request_id: RequestId,
    pub ready_time: Millis,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info(cur: u32, max: u32) -> RuntimeInfo {
        let mut i = RuntimeInfo::new(RequestId(0), 1, max);
        i.current_iteration = cur;
        i
    }

    #[test]
    fn chain_successors_are_legal() {
        assert_eq!(advance_phase(Phase::Received, Phase::Preprocessing), Ok(Phase::Preprocessing));
        assert_eq!(advance_phase(Phase::Running, Phase::Finished), Ok(Phase::Finished));
    }

    #[test]
    fn skipping_or_revisiting_is_illegal() {
        assert!(matches!(advance_phase(Phase::Received, Phase::Running), Err(Error::IllegalTransition { .. })));
        assert!(advance_phase(Phase::Running, Phase::Running).is_err());
        assert!(advance_phase(Phase::Finished, Phase::Received).is_err());
    }

    #[test]
    fn record_token_examples() {
        let (next, done) = record_token(&info(0, 300), 300).unwrap();
        assert_eq!((next.current_iteration, done), (1, false));

        let (next, done) = record_token(&info(299, 300), 300).unwrap();
        assert_eq!((next.current_iteration, done), (300, true));

        let (next, done) = record_token(&info(457, 512), 458).unwrap();
        assert_eq!((next.current_iteration, done), (458, true));
    }

    #[test]
    fn record_token_finished_flag_exhaustive() {
        // every (iteration, eos, max) triple up to 16
        for max in 1..=16u32 {
            for eos in 1..=16u32 {
                let stop = eos.min(max);
                for cur in 0..=16u32 {
                    let res = record_token(&info(cur, max), eos);
                    if cur < stop {
                        let (next, done) = res.unwrap();
                        assert_eq!(next.current_iteration, cur + 1);
                        assert_eq!(done, cur + 1 == stop);
                    } else {
                        assert_eq!(res, Err(Error::AlreadyFinished(RequestId(0))));
                    }
                }
            }
        }
    }

    #[test]
    fn record_token_counts_sum_to_stop() {
        let mut i = info(0, 40);
        let mut calls = 0;
        loop {
            let (next, done) = record_token(&i, 25).unwrap();
            assert!(next.current_iteration > i.current_iteration);
            i = next;
            calls += 1;
            if done {
                break;
            }
        }
        assert_eq!(calls, 25);
    }

    #[test]
    fn request_validation() {
        assert!(Request::new(0, 0.0, 10).validate().is_ok());
        assert!(Request::new(0, 0.0, 10).with_eos_at(11).validate().is_err());
        assert!(Request::new(0, 0.0, 10).with_eos_at(0).validate().is_err());
        assert!(Request::new(0, -1.0, 10).validate().is_err());
        assert!(Request::new(0, 0.0, 10).with_batch_size(0).validate().is_err());
    }
}
