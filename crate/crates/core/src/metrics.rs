//! Summary statistics derived from a finished trace.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::request::{Millis, RequestId};
use crate::trace::{EventKind, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// First arrival to last eviction.
    pub makespan: Millis,
    /// Finish minus arrival, ordered by request id.
    pub per_request_latency: Vec<Millis>,
    pub mean_latency: Millis,
    pub p50_latency: Millis,
    pub p99_latency: Millis,
    /// Iterations from the first generated token to the last one, inclusive.
    pub total_stream_iterations: u64,
    /// Time-averaged number of running requests divided by the request count.
    pub overlap_percent: f64,
    pub bytes_shuffled: u64,
    pub shuffle_count: u64,
}

#[derive(Default)]
struct Span {
    arrived: Option<Millis>,
    running: Option<Millis>,
    finished: Option<Millis>,
}

pub fn compute_metrics(trace: &Trace, n_requests: usize) -> Result<Metrics> {
    if n_requests == 0 {
        return Err(Error::IncompleteTrace("no requests".into()));
    }
    let mut spans: BTreeMap<RequestId, Span> = BTreeMap::new();
    let mut first_token: Option<Millis> = None;
    let mut last_token: Option<Millis> = None;
    let mut bytes_shuffled = 0;
    let mut shuffle_count = 0;

    for e in &trace.events {
        match (&e.kind, e.request) {
            (EventKind::Arrived, Some(id)) => spans.entry(id).or_default().arrived = Some(e.time),
            (EventKind::Fused { .. }, Some(id)) => spans.entry(id).or_default().running = Some(e.time),
            (EventKind::Evicted, Some(id)) => spans.entry(id).or_default().finished = Some(e.time),
            (EventKind::TokenGenerated { .. }, _) => {
                first_token.get_or_insert(e.time);
                last_token = Some(e.time);
            }
            (EventKind::ShuffleExecuted { bytes, .. }, _) => {
                bytes_shuffled += bytes;
                shuffle_count += 1;
            }
            _ => {}
        }
    }

    if spans.len() != n_requests {
        return Err(Error::IncompleteTrace(format!("expected {n_requests} requests, saw {}", spans.len())));
    }
    let mut intervals = Vec::with_capacity(n_requests);
    let mut latencies = Vec::with_capacity(n_requests);
    for (id, s) in &spans {
        match (s.arrived, s.running, s.finished) {
            (Some(a), Some(r), Some(f)) => {
                latencies.push(f - a);
                intervals.push((r, f));
            }
            _ => return Err(Error::IncompleteTrace(format!("request {id} did not complete its lifecycle"))),
        }
    }
    let (first_token, last_token) = match (first_token, last_token) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::IncompleteTrace("no tokens generated".into())),
    };

    let total_stream_iterations = trace
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::IterationCompleted { .. }))
        .filter(|e| e.time >= first_token && e.time <= last_token)
        .count() as u64;

    let first_arrival = spans.values().filter_map(|s| s.arrived).fold(f64::INFINITY, f64::min);
    let last_finish = spans.values().filter_map(|s| s.finished).fold(f64::NEG_INFINITY, f64::max);
    let first_running = intervals.iter().map(|i| i.0).fold(f64::INFINITY, f64::min);
    let busy: f64 = intervals.iter().map(|(r, f)| f - r).sum();
    let window = last_finish - first_running;
    let overlap_percent = if window > 0.0 { busy / window / n_requests as f64 } else { 1.0 / n_requests as f64 };

    let mut sorted = latencies.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(Metrics {
        makespan: last_finish - first_arrival,
        mean_latency: latencies.iter().sum::<f64>() / n_requests as f64,
        p50_latency: percentile(&sorted, 50.0),
        p99_latency: percentile(&sorted, 99.0),
        per_request_latency: latencies,
        total_stream_iterations,
        overlap_percent,
        bytes_shuffled,
        shuffle_count,
    })
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}
