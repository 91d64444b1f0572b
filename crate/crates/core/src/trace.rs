//! Timestamped event log shared by every discipline.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::request::{Millis, RequestId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discipline {
    /// Temporal fusion with trimming and sliding-window shuffles.
    Fusion,
    /// Temporal fusion that never reorganizes the buffer while requests are in flight.
    FusionNoShuffle,
    /// Temporal fusion that trims the window ends but never shuffles.
    FusionTrimOnly,
    DynamicBatching,
    ConcurrentInstances,
}

impl Discipline {
    pub fn name(&self) -> &'static str {
        match self {
            Discipline::Fusion => "fusion",
            Discipline::FusionNoShuffle => "fusion_no_shuffle",
            Discipline::FusionTrimOnly => "fusion_trim_only",
            Discipline::DynamicBatching => "dynamic_batching",
            Discipline::ConcurrentInstances => "concurrent_instances",
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Arrived,
    PreprocessStart,
    PreprocessDone,
    /// Entered the compute stream. `slot` is the buffer slot for fusion disciplines.
    Fused {
        slot: Option<usize>,
    },
    /// `token` is 1-based.
    TokenGenerated {
        token: u32,
    },
    Evicted,
    ShuffleExecuted {
        bytes: u64,
        moves: usize,
        duration: Millis,
    },
    IterationCompleted {
        index: u64,
        duration: Millis,
        active: usize,
    },
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Arrived => "arrived",
            EventKind::PreprocessStart => "preprocess_start",
            EventKind::PreprocessDone => "preprocess_done",
            EventKind::Fused { .. } => "fused",
            EventKind::TokenGenerated { .. } => "token",
            EventKind::Evicted => "evicted",
            EventKind::ShuffleExecuted { .. } => "shuffle",
            EventKind::IterationCompleted { .. } => "iteration",
        }
    }

    /// Ordering among events that share a timestamp.
    fn rank(&self) -> u8 {
        match self {
            EventKind::Arrived => 0,
            EventKind::PreprocessStart => 1,
            EventKind::PreprocessDone => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: Millis,
    pub request: Option<RequestId>,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub discipline: Discipline,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn events_for(&self, request: RequestId) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.request == Some(request))
    }

    /// Writes one line per event: `time<TAB>kind<TAB>request<TAB>payload`.
    pub fn write_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.events {
            let req = e.request.map_or_else(|| "-".to_string(), |r| r.to_string());
            let payload = match &e.kind {
                EventKind::Fused { slot: Some(s) } => format!("slot={s}"),
                EventKind::TokenGenerated { token } => format!("token={token}"),
                EventKind::ShuffleExecuted { bytes, moves, duration } => {
                    format!("bytes={bytes} moves={moves} duration={duration}")
                }
                EventKind::IterationCompleted { index, duration, active } => {
                    format!("index={index} duration={duration} active={active}")
                }
                _ => "-".to_string(),
            };
            writeln!(out, "{}\t{}\t{}\t{}\t{}", e.time, self.discipline, e.kind.label(), req, payload)?;
        }
        Ok(())
    }

    pub fn log_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_log(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("log is ASCII")
    }
}

/// Builds a trace in time order from two sources: lifecycle events known up
/// front (arrival and pre-processing, which never wait on the stream) and
/// stream events pushed as the simulation advances.
pub(crate) struct TraceRecorder {
    discipline: Discipline,
    pending: std::collections::VecDeque<Event>,
    events: Vec<Event>,
}

impl TraceRecorder {
    pub fn new(discipline: Discipline, mut lifecycle: Vec<Event>) -> Self {
        lifecycle.sort_by(|a, b| {
            a.time.total_cmp(&b.time).then(a.kind.rank().cmp(&b.kind.rank())).then(a.request.cmp(&b.request))
        });
        Self { discipline, pending: lifecycle.into(), events: Vec::new() }
    }

    /// Lifecycle events for one request whose pre-processing starts on arrival.
    pub fn lifecycle_of(request: RequestId, arrival: Millis, ready: Millis) -> [Event; 3] {
        [
            Event { time: arrival, request: Some(request), kind: EventKind::Arrived },
            Event { time: arrival, request: Some(request), kind: EventKind::PreprocessStart },
            Event { time: ready, request: Some(request), kind: EventKind::PreprocessDone },
        ]
    }

    pub fn push(&mut self, time: Millis, request: Option<RequestId>, kind: EventKind) {
        self.flush_until(time);
        self.events.push(Event { time, request, kind });
    }

    fn flush_until(&mut self, time: Millis) {
        while self.pending.front().is_some_and(|e| e.time <= time) {
            let e = self.pending.pop_front().expect("front exists");
            self.events.push(e);
        }
    }

    pub fn finish(mut self) -> Trace {
        self.events.extend(self.pending.drain(..));
        Trace { discipline: self.discipline, events: self.events }
    }
}
