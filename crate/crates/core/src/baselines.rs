//! Comparison disciplines: windowed dynamic batching on one model instance,
//! and one model instance per request with shared-bandwidth contention.

use serde::{Deserialize, Serialize};

use crate::cost::{CostParams, TpConfig};
use crate::engine::lifecycle_events;
use crate::error::{Error, Result};
use crate::request::{Millis, Request, RequestId};
use crate::trace::{Discipline, EventKind, Trace, TraceRecorder};
use crate::workload::Workload;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchWindowConfig {
    pub window_ms: Millis,
    pub max_batch: usize,
}

impl Default for BatchWindowConfig {
    fn default() -> Self {
        Self { window_ms: 500.0, max_batch: 32 }
    }
}

impl BatchWindowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_ms >= 0.0) || !self.window_ms.is_finite() {
            return Err(Error::Config(format!("batch window must be >= 0, got {}", self.window_ms)));
        }
        if self.max_batch == 0 {
            return Err(Error::Config("max_batch must be >= 1".into()));
        }
        Ok(())
    }
}

/// A packed batch and the earliest instant it may be handed to the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub members: Vec<Request>,
    pub close_time: Millis,
}

/// Splits arrivals into back-to-back windows anchored at the first arrival.
/// A batch closes when its window elapses or when it reaches `max_batch`
/// members, whichever comes first. With a zero-length window only requests
/// arriving at the same instant share a batch.
pub fn pack_batches(workload: &Workload, cfg: &BatchWindowConfig) -> Vec<Batch> {
    let requests = workload.requests();
    let t0 = requests[0].arrival_time;
    let window_of = |t: Millis| -> u64 {
        if cfg.window_ms > 0.0 {
            ((t - t0) / cfg.window_ms).floor() as u64
        } else {
            0
        }
    };

    let mut batches: Vec<Batch> = Vec::new();
    let mut current: Vec<Request> = Vec::new();
    let mut current_key: Option<(u64, u64)> = None;
    for r in requests {
        // zero-length windows are keyed by the arrival instant itself
        let key = (window_of(r.arrival_time), if cfg.window_ms > 0.0 { 0 } else { r.arrival_time.to_bits() });
        if current_key != Some(key) && !current.is_empty() {
            batches.push(close(std::mem::take(&mut current), key_close(current_key, t0, cfg)));
        }
        current_key = Some(key);
        current.push(r.clone());
        if current.len() == cfg.max_batch {
            let full_at = r.arrival_time;
            batches.push(close(std::mem::take(&mut current), full_at));
        }
    }
    if !current.is_empty() {
        batches.push(close(current, key_close(current_key, t0, cfg)));
    }
    batches
}

fn key_close(key: Option<(u64, u64)>, t0: Millis, cfg: &BatchWindowConfig) -> Millis {
    let (window, instant) = key.expect("non-empty batch has a key");
    if cfg.window_ms > 0.0 {
        t0 + (window + 1) as f64 * cfg.window_ms
    } else {
        f64::from_bits(instant)
    }
}

fn close(members: Vec<Request>, close_time: Millis) -> Batch {
    Batch { members, close_time }
}

/// One model instance serving packed batches in order. Every member rides
/// every iteration until the longest member finishes.
pub fn run_dynamic_batching(
    workload: &Workload,
    params: &CostParams,
    tp: &TpConfig,
    cfg: &BatchWindowConfig,
) -> Result<Trace> {
    params.validate().map_err(|e| Error::Config(e.to_string()))?;
    tp.validate().map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;

    let mut trace = TraceRecorder::new(Discipline::DynamicBatching, lifecycle_events(workload, params));
    let mut instance_free_at = f64::NEG_INFINITY;
    let mut iteration_index = 0u64;

    for batch in pack_batches(workload, cfg) {
        let ready =
            batch.members.iter().map(|r| r.arrival_time + params.preprocess_ms).fold(f64::NEG_INFINITY, f64::max);
        let mut now = batch.close_time.max(ready).max(instance_free_at);
        for r in &batch.members {
            trace.push(now, Some(r.id), EventKind::Fused { slot: None });
        }

        let bytes: u64 = batch.members.iter().map(|r| params.tensor_size(r.batch_size)).sum();
        let duration = params.iteration_time(batch.members.len(), bytes, tp)?;
        let iterations = batch.members.iter().map(Request::tokens_to_generate).max().unwrap_or(0);
        for i in 1..=iterations {
            now += duration;
            for r in batch.members.iter().filter(|r| r.tokens_to_generate() >= i) {
                trace.push(now, Some(r.id), EventKind::TokenGenerated { token: i });
            }
            trace.push(
                now,
                None,
                EventKind::IterationCompleted { index: iteration_index, duration, active: batch.members.len() },
            );
            iteration_index += 1;
        }
        for r in &batch.members {
            trace.push(now, Some(r.id), EventKind::Evicted);
        }
        instance_free_at = now;
    }
    Ok(trace.finish())
}

struct Instance {
    id: RequestId,
    /// Solo (uncontended) iteration time.
    solo_ms: Millis,
    total: u32,
    /// Iterations of progress, fractional.
    progress: f64,
    emitted: u32,
    last_token_at: Millis,
}

/// One instance per request, launched as soon as pre-processing finishes.
/// While `k` instances run, each progresses at `1 / contention_factor(k)` of
/// its solo rate; rates change only when an instance starts or finishes.
pub fn run_concurrent_instances(workload: &Workload, params: &CostParams, tp: &TpConfig) -> Result<Trace> {
    params.validate().map_err(|e| Error::Config(e.to_string()))?;
    tp.validate().map_err(|e| Error::Config(e.to_string()))?;

    let mut starts: Vec<(Millis, &Request)> =
        workload.requests().iter().map(|r| (r.arrival_time + params.preprocess_ms, r)).collect();
    starts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));

    // (time, request, kind) stream events, sorted before recording
    let mut events: Vec<(Millis, Option<RequestId>, EventKind)> = Vec::new();
    let mut running: Vec<Instance> = Vec::new();
    let mut next_start = 0;
    let mut now = starts[0].0;
    let mut iteration_index = 0u64;

    while next_start < starts.len() || !running.is_empty() {
        while next_start < starts.len() && starts[next_start].0 <= now {
            let r = starts[next_start].1;
            // each instance owns its communicator and its own buffer
            let solo_ms = params.iteration_time(1, params.tensor_size(r.batch_size), tp)?;
            events.push((now, Some(r.id), EventKind::Fused { slot: None }));
            running.push(Instance {
                id: r.id,
                solo_ms,
                total: r.tokens_to_generate(),
                progress: 0.0,
                emitted: 0,
                last_token_at: now,
            });
            next_start += 1;
        }
        if running.is_empty() {
            now = starts[next_start].0;
            continue;
        }

        let factor = params.contention_factor(running.len())?;
        let finish_in =
            running.iter().map(|i| (i.total as f64 - i.progress) * i.solo_ms * factor).fold(f64::INFINITY, f64::min);
        let start_in = starts.get(next_start).map_or(f64::INFINITY, |s| s.0 - now);
        let step = finish_in.min(start_in);
        let end = now + step;

        for inst in running.iter_mut() {
            let remaining_ms = (inst.total as f64 - inst.progress) * inst.solo_ms * factor;
            let finishes = remaining_ms <= step;
            let new_progress =
                if finishes { inst.total as f64 } else { inst.progress + step / (inst.solo_ms * factor) };
            while inst.emitted < inst.total {
                let next = inst.emitted + 1;
                let reached = if finishes && next == inst.total { true } else { new_progress + 1e-9 >= next as f64 };
                if !reached {
                    break;
                }
                let at = if finishes && next == inst.total {
                    end.min(now + remaining_ms)
                } else {
                    (now + (next as f64 - inst.progress) * inst.solo_ms * factor).min(end)
                };
                events.push((at, Some(inst.id), EventKind::TokenGenerated { token: next }));
                events.push((
                    at,
                    Some(inst.id),
                    EventKind::IterationCompleted {
                        index: iteration_index,
                        duration: at - inst.last_token_at,
                        active: 1,
                    },
                ));
                iteration_index += 1;
                inst.last_token_at = at;
                inst.emitted = next;
            }
            inst.progress = new_progress;
        }
        now = end;
        running.retain(|inst| {
            let done = inst.emitted == inst.total;
            if done {
                events.push((inst.last_token_at, Some(inst.id), EventKind::Evicted));
            }
            !done
        });
    }

    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut trace = TraceRecorder::new(Discipline::ConcurrentInstances, lifecycle_events(workload, params));
    for (t, id, kind) in events {
        trace.push(t, id, kind);
    }
    Ok(trace.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_fusion, Compaction};

    fn params() -> CostParams {
        CostParams::default()
    }

    fn fused(trace: &Trace, id: u32) -> Millis {
        trace.events_for(RequestId(id)).find(|e| matches!(e.kind, EventKind::Fused { .. })).unwrap().time
    }

    fn end(trace: &Trace) -> Millis {
        trace.events.iter().filter(|e| e.kind == EventKind::Evicted).map(|e| e.time).fold(0.0, f64::max)
    }

    #[test]
    fn first_request_waits_for_the_whole_window() {
        let w = Workload::new(vec![Request::new(0, 0.0, 16)]).unwrap();
        let cfg = BatchWindowConfig { window_ms: 500.0, max_batch: 8 };
        let trace = run_dynamic_batching(&w, &params(), &TpConfig::single(), &cfg).unwrap();
        assert!(fused(&trace, 0) >= 500.0);
    }

    #[test]
    fn late_arrival_waits_for_running_batch() {
        let w =
            Workload::new(vec![Request::new(0, 0.0, 300), Request::new(1, 100.0, 300), Request::new(2, 510.0, 300)])
                .unwrap();
        let cfg = BatchWindowConfig { window_ms: 500.0, max_batch: 8 };
        let batches = pack_batches(&w, &cfg);
        assert_eq!(batches.len(), 2);
        assert_eq!(batches[0].members.len(), 2);
        let trace = run_dynamic_batching(&w, &params(), &TpConfig::single(), &cfg).unwrap();
        let first_done = trace.events_for(RequestId(0)).find(|e| e.kind == EventKind::Evicted).unwrap().time;
        assert_eq!(fused(&trace, 2), first_done);
        assert_eq!(fused(&trace, 0), 500.0);
    }

    #[test]
    fn max_batch_closes_early() {
        let w = Workload::new((0..5).map(|i| Request::new(i, i as f64 * 10.0, 4)).collect()).unwrap();
        let cfg = BatchWindowConfig { window_ms: 500.0, max_batch: 2 };
        let b = pack_batches(&w, &cfg);
        let shape: Vec<(usize, Millis)> = b.iter().map(|b| (b.members.len(), b.close_time)).collect();
        assert_eq!(shape, vec![(2, 10.0), (2, 30.0), (1, 500.0)]);
    }

    #[test]
    fn zero_window_groups_identical_instants() {
        let w = Workload::new(vec![Request::new(0, 5.0, 4), Request::new(1, 5.0, 4), Request::new(2, 6.0, 4)]).unwrap();
        let b = pack_batches(&w, &BatchWindowConfig { window_ms: 0.0, max_batch: 8 });
        let shape: Vec<(usize, Millis)> = b.iter().map(|b| (b.members.len(), b.close_time)).collect();
        assert_eq!(shape, vec![(2, 5.0), (1, 6.0)]);
    }

    #[test]
    fn batch_members_ride_until_longest_finishes() {
        let w = Workload::new(vec![Request::new(0, 0.0, 10).with_eos_at(3), Request::new(1, 0.0, 10)]).unwrap();
        let cfg = BatchWindowConfig { window_ms: 0.0, max_batch: 8 };
        let trace = run_dynamic_batching(&w, &params(), &TpConfig::single(), &cfg).unwrap();
        let t0 = trace.events_for(RequestId(0)).filter(|e| matches!(e.kind, EventKind::TokenGenerated { .. })).count();
        assert_eq!(t0, 3);
        let e0 = trace.events_for(RequestId(0)).find(|e| e.kind == EventKind::Evicted).unwrap().time;
        let e1 = trace.events_for(RequestId(1)).find(|e| e.kind == EventKind::Evicted).unwrap().time;
        assert_eq!(e0, e1);
    }

    #[test]
    fn single_request_matches_fusion() {
        let p = params();
        let w = Workload::new(vec![Request::new(0, 3.0, 512)]).unwrap();
        let tp = TpConfig::single();
        let f = end(&run_fusion(&w, &p, &tp, Compaction::Shuffle).unwrap());
        let d = end(&run_dynamic_batching(&w, &p, &tp, &BatchWindowConfig { window_ms: 0.0, max_batch: 1 }).unwrap());
        let c = end(&run_concurrent_instances(&w, &p, &tp).unwrap());
        assert_eq!(f, d);
        assert!(((f - c) / f).abs() < 1e-9);
    }

    #[test]
    fn full_overlap_slows_each_instance_by_contention() {
        let p = CostParams { contention_gamma: 0.5, ..params() };
        let tp = TpConfig::single();
        let solo = Workload::new(vec![Request::new(0, 0.0, 100)]).unwrap();
        let pair = Workload::new(vec![Request::new(0, 0.0, 100), Request::new(1, 0.0, 100)]).unwrap();
        let s = end(&run_concurrent_instances(&solo, &p, &tp).unwrap()) - p.preprocess_ms;
        let d = end(&run_concurrent_instances(&pair, &p, &tp).unwrap()) - p.preprocess_ms;
        assert!((d / s - 1.5).abs() < 1e-9, "ratio {}", d / s);
    }

    #[test]
    fn concurrent_latency_grows_with_instances() {
        let p = CostParams { contention_gamma: 0.3, ..params() };
        let tp = TpConfig::single();
        let mut last = 0.0;
        for k in 1..6 {
            let w = Workload::new((0..k).map(|i| Request::new(i, 0.0, 50)).collect()).unwrap();
            let m = end(&run_concurrent_instances(&w, &p, &tp).unwrap());
            assert!(m > last);
            last = m;
        }
    }

    #[test]
    fn concurrent_piecewise_rates() {
        // second instance joins halfway through the first one's solo run
        let p = CostParams { contention_gamma: 1.0, preprocess_ms: 0.0, base_iteration_ms: 10.0, ..params() };
        let w = Workload::new(vec![Request::new(0, 0.0, 10), Request::new(1, 50.0, 10)]).unwrap();
        let trace = run_concurrent_instances(&w, &p, &TpConfig::single()).unwrap();
        let e0 = trace.events_for(RequestId(0)).find(|e| e.kind == EventKind::Evicted).unwrap().time;
        let e1 = trace.events_for(RequestId(1)).find(|e| e.kind == EventKind::Evicted).unwrap().time;
        // r0: 5 iterations solo (50ms), 5 at half rate (100ms)
        assert!((e0 - 150.0).abs() < 1e-9);
        // r1: 5 iterations at half rate by 150, 5 solo after
        assert!((e1 - 200.0).abs() < 1e-9);
        let tokens = trace.events.iter().filter(|e| matches!(e.kind, EventKind::TokenGenerated { .. })).count();
        assert_eq!(tokens, 20);
    }
}
