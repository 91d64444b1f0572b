//! The temporal-fusion discipline: one compute stream, iteration-atomic
//! admission of newly ready requests, eviction on EOS, and buffer compaction.

use std::collections::{BTreeMap, VecDeque};

use crate::buffer::BufferLayout;
use crate::cost::{CostParams, TpConfig};
use crate::error::{Error, Result};
use crate::request::{advance_phase, record_token, Context, Millis, Phase, Request, RequestId, RuntimeInfo};
use crate::trace::{Discipline, EventKind, Trace, TraceRecorder};
use crate::workload::Workload;

/// What the stream does with orphaned slots after an eviction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compaction {
    /// Trim both window ends, then shuffle if interior holes remain.
    Shuffle,
    /// Trim both window ends only.
    TrimOnly,
    /// Keep `buffer_offset` and `buffer_size` as they are until every slot is
    /// orphaned.
    None,
}

impl Compaction {
    pub fn discipline(self) -> Discipline {
        match self {
            Compaction::Shuffle => Discipline::Fusion,
            Compaction::TrimOnly => Discipline::FusionTrimOnly,
            Compaction::None => Discipline::FusionNoShuffle,
        }
    }
}

/// Pre-processing runs on its own thread per request, so it never waits on
/// the stream or on other requests.
pub fn preprocess(request: &Request, params: &CostParams) -> (Context, RuntimeInfo) {
    let ctx = Context { request_id: request.id, ready_time: request.arrival_time + params.preprocess_ms };
    let info = RuntimeInfo::new(request.id, params.tensor_size(request.batch_size), request.max_output_length);
    (ctx, info)
}

struct Tracked {
    request: Request,
    phase: Phase,
}

/// Mutable state of the single compute stream.
pub struct StreamState {
    pub layout: BufferLayout,
    pub active: BTreeMap<RequestId, RuntimeInfo>,
    pub now: Millis,
    pub iteration_index: u64,
    /// Requests not yet arrived (Q_r), in arrival order.
    request_queue: VecDeque<Request>,
    /// Requests being pre-processed, in ready order.
    preprocessing: VecDeque<(Context, RuntimeInfo)>,
    /// Ready-for-fusion queue (Q_f).
    ready_queue: VecDeque<(Context, RuntimeInfo)>,
    tracked: BTreeMap<RequestId, Tracked>,
    bytes_shuffled: u64,
}

impl StreamState {
    pub fn new(workload: &Workload) -> Self {
        Self {
            layout: BufferLayout::new(),
            active: BTreeMap::new(),
            now: 0.0,
            iteration_index: 0,
            request_queue: workload.requests().iter().cloned().collect(),
            preprocessing: VecDeque::new(),
            ready_queue: VecDeque::new(),
            tracked: workload
                .requests()
                .iter()
                .map(|r| (r.id, Tracked { request: r.clone(), phase: Phase::Received }))
                .collect(),
            bytes_shuffled: 0,
        }
    }

    pub fn with_layout(mut self, layout: BufferLayout) -> Self {
        self.layout = layout;
        self
    }

    pub fn phase_of(&self, id: RequestId) -> Option<Phase> {
        self.tracked.get(&id).map(|t| t.phase)
    }

    pub fn bytes_shuffled(&self) -> u64 {
        self.bytes_shuffled
    }

    pub fn ready_len(&self) -> usize {
        self.ready_queue.len()
    }

    pub fn is_drained(&self) -> bool {
        self.active.is_empty()
            && self.request_queue.is_empty()
            && self.preprocessing.is_empty()
            && self.ready_queue.is_empty()
    }

    fn advance(&mut self, id: RequestId, target: Phase) -> Result<()> {
        let t = self.tracked.get_mut(&id).ok_or(Error::UnknownRequest(id))?;
        t.phase = advance_phase(t.phase, target)?;
        Ok(())
    }

    /// Moves arrived requests into pre-processing and finished
    /// pre-processing into the ready queue, as of `self.now`.
    fn admit(&mut self, params: &CostParams) -> Result<()> {
        while self.request_queue.front().is_some_and(|r| r.arrival_time <= self.now) {
            let req = self.request_queue.pop_front().expect("front exists");
            self.advance(req.id, Phase::Preprocessing)?;
            let entry = preprocess(&req, params);
            let pos = self.preprocessing.partition_point(|(c, _)| c.ready_time <= entry.0.ready_time);
            self.preprocessing.insert(pos, entry);
        }
        while self.preprocessing.front().is_some_and(|(c, _)| c.ready_time <= self.now) {
            let entry = self.preprocessing.pop_front().expect("front exists");
            self.advance(entry.0.request_id, Phase::ReadyForFusion)?;
            self.ready_queue.push_back(entry);
        }
        Ok(())
    }

    /// Earliest instant at which something new becomes ready.
    fn next_ready_time(&self, params: &CostParams) -> Option<Millis> {
        let pre = self.preprocessing.front().map(|(c, _)| c.ready_time);
        let arriving = self.request_queue.front().map(|r| r.arrival_time + params.preprocess_ms);
        match (pre, arriving) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Fuses every context ready at `self.now`, in FIFO order. Only called at
    /// an iteration boundary or while the stream is idle.
    pub(crate) fn try_fuse_pending(&mut self, params: &CostParams, trace: &mut TraceRecorder) -> Result<usize> {
        self.admit(params)?;
        let mut fused = 0;
        while let Some((ctx, mut info)) = self.ready_queue.pop_front() {
            let slot = self.layout.fuse_request(ctx.request_id, info.tensor_size)?;
            info.memory_offset = slot;
            self.advance(ctx.request_id, Phase::Running)?;
            trace.push(self.now, Some(ctx.request_id), EventKind::Fused { slot: Some(slot) });
            self.active.insert(ctx.request_id, info);
            fused += 1;
        }
        Ok(fused)
    }

    /// Runs one uninterruptible iteration over every active request, then
    /// evicts finished requests and compacts the buffer per `compaction`.
    pub(crate) fn step_iteration(
        &mut self,
        params: &CostParams,
        tp: &TpConfig,
        compaction: Compaction,
        trace: &mut TraceRecorder,
    ) -> Result<()> {
        if self.active.is_empty() {
            return Err(Error::EmptyStream);
        }
        // Kernels and collectives see the whole window, orphans included.
        let window = self.layout.buffer_size();
        let duration = params.iteration_time(window, self.layout.live_bytes(), tp)?;
        self.now += duration;

        let mut finished = Vec::new();
        for (id, info) in self.active.iter_mut() {
            let eos_at = self.tracked[id].request.actual_output_length;
            let (next, done) = record_token(info, eos_at)?;
            *info = next;
            trace.push(self.now, Some(*id), EventKind::TokenGenerated { token: info.current_iteration });
            if done {
                finished.push(*id);
            }
        }
        trace.push(
            self.now,
            None,
            EventKind::IterationCompleted { index: self.iteration_index, duration, active: self.active.len() },
        );
        self.iteration_index += 1;

        for id in &finished {
            self.layout.evict_request(*id)?;
            self.active.remove(id);
            self.advance(*id, Phase::Finished)?;
            trace.push(self.now, Some(*id), EventKind::Evicted);
        }

        match compaction {
            Compaction::None => self.layout.release_if_drained(),
            Compaction::TrimOnly => self.layout.trim_boundaries(),
            Compaction::Shuffle => {
                self.layout.trim_boundaries();
                if !finished.is_empty() && self.layout.has_interior_holes() {
                    self.shuffle(params, trace)?;
                }
            }
        }
        Ok(())
    }

    fn shuffle(&mut self, params: &CostParams, trace: &mut TraceRecorder) -> Result<()> {
        let plan = self.layout.plan_shuffle();
        self.layout.apply_shuffle(&plan)?;
        for mv in &plan.moves {
            if let Some(info) = self.active.get_mut(&mv.request) {
                info.memory_offset = mv.dst_slot;
            }
        }
        let duration = params.shuffle_time(plan.total_bytes_moved);
        self.now += duration;
        self.bytes_shuffled += plan.total_bytes_moved;
        trace.push(
            self.now,
            None,
            EventKind::ShuffleExecuted { bytes: plan.total_bytes_moved, moves: plan.moves.len(), duration },
        );
        Ok(())
    }
}

pub(crate) fn lifecycle_events(workload: &Workload, params: &CostParams) -> Vec<crate::trace::Event> {
    workload
        .requests()
        .iter()
        .flat_map(|r| TraceRecorder::lifecycle_of(r.id, r.arrival_time, r.arrival_time + params.preprocess_ms))
        .collect()
}

/// Serves `workload` to completion on a single fused stream.
pub fn run_fusion(workload: &Workload, params: &CostParams, tp: &TpConfig, compaction: Compaction) -> Result<Trace> {
    run_fusion_observed(workload, params, tp, compaction, |_| {})
}

/// Like [`run_fusion`], calling `observe` after every iteration boundary
/// once eviction and compaction are done.
pub fn run_fusion_observed(
    workload: &Workload,
    params: &CostParams,
    tp: &TpConfig,
    compaction: Compaction,
    mut observe: impl FnMut(&StreamState),
) -> Result<Trace> {
    params.validate().map_err(|e| Error::Config(e.to_string()))?;
    tp.validate().map_err(|e| Error::Config(e.to_string()))?;

    let mut trace = TraceRecorder::new(compaction.discipline(), lifecycle_events(workload, params));
    let mut state = StreamState::new(workload);
    state.now = workload.requests()[0].arrival_time;

    loop {
        state.try_fuse_pending(params, &mut trace)?;
        if state.active.is_empty() {
            match state.next_ready_time(params) {
                Some(t) => {
                    // idle: skip straight to the next readiness instant
                    state.now = state.now.max(t);
                    continue;
                }
                None => break,
            }
        }
        state.step_iteration(params, tp, compaction, &mut trace)?;
        observe(&state);
    }
    debug_assert!(state.is_drained());
    Ok(trace.finish())
}
