//! Invariant checkers and scenario strategies shared by the property tests
//! and the acceptance harness.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use temporal_fusion::buffer::{BufferLayout, Slot};
use temporal_fusion::experiments::{run_suite, write_csv, ArrivalSpec, Scenario, SuiteConfig};
use temporal_fusion::{
    run_fusion_observed, Compaction, CostParams, Discipline, EventKind, Placement, RequestId, TpConfig, Trace, Workload,
};

pub const EPS: f64 = 1e-9;

pub type Check = Result<(), String>;

/// Per iteration: the set emitting tokens equals the set fused and not yet
/// evicted, nobody emits twice, and no fusion lands inside an iteration.
pub fn check_atomicity(trace: &Trace) -> Check {
    let mut active = BTreeSet::new();
    let mut emitted = BTreeSet::new();
    let mut spans = Vec::new();
    let mut fused_at = Vec::new();
    for e in &trace.events {
        match e.kind {
            EventKind::Fused { .. } => {
                let id = e.request.ok_or("fused without request")?;
                if !active.insert(id) {
                    return Err(format!("{id} fused twice"));
                }
                fused_at.push(e.time);
            }
            EventKind::TokenGenerated { .. } => {
                let id = e.request.ok_or("token without request")?;
                if !active.contains(&id) {
                    return Err(format!("{id} emitted a token while not fused at {}", e.time));
                }
                if !emitted.insert(id) {
                    return Err(format!("{id} emitted two tokens in one iteration at {}", e.time));
                }
            }
            EventKind::IterationCompleted { index, duration, active: n } => {
                if emitted != active {
                    return Err(format!("iteration {index}: emitted {emitted:?} but active {active:?}"));
                }
                if n != active.len() {
                    return Err(format!("iteration {index}: reports {n} active, saw {}", active.len()));
                }
                spans.push((e.time - duration, e.time));
                emitted.clear();
            }
            EventKind::Evicted => {
                active.remove(&e.request.ok_or("eviction without request")?);
            }
            _ => {}
        }
    }
    if !active.is_empty() {
        return Err(format!("still active at end: {active:?}"));
    }
    for t in fused_at {
        if let Some((s, f)) = spans.iter().find(|(s, f)| t > s + EPS && t < f - EPS) {
            return Err(format!("fusion at {t} inside iteration [{s}, {f}]"));
        }
    }
    Ok(())
}

/// Every request emits tokens 1..=n in order with n = its EOS position.
pub fn check_token_conservation(trace: &Trace, workload: &Workload) -> Check {
    for r in workload.requests() {
        let tokens: Vec<u32> = trace
            .events_for(r.id)
            .filter_map(|e| match e.kind {
                EventKind::TokenGenerated { token } => Some(token),
                _ => None,
            })
            .collect();
        let expected: Vec<u32> = (1..=r.tokens_to_generate()).collect();
        if tokens != expected {
            return Err(format!("{}: tokens {:?}, expected 1..={}", r.id, tokens.len(), r.tokens_to_generate()));
        }
    }
    Ok(())
}

/// Arrived, PreprocessStart, PreprocessDone, Fused, tokens, Evicted.
pub fn check_phase_order(trace: &Trace, workload: &Workload) -> Check {
    for r in workload.requests() {
        // per-instance iteration markers carry a request id too
        let mut labels: Vec<&str> =
            trace.events_for(r.id).map(|e| e.kind.label()).filter(|l| *l != "iteration").collect();
        labels.dedup();
        let expected = ["arrived", "preprocess_start", "preprocess_done", "fused", "token", "evicted"];
        if labels != expected {
            return Err(format!("{}: phase sequence {labels:?}", r.id));
        }
        let times: Vec<f64> = trace.events_for(r.id).map(|e| e.time).collect();
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(format!("{}: timestamps go backwards", r.id));
        }
    }
    if trace.events.windows(2).any(|w| w[1].time < w[0].time) {
        return Err("trace timestamps go backwards".into());
    }
    Ok(())
}

/// Fusion happens at the first boundary at or after readiness (plus any
/// shuffle at that boundary), or immediately if the stream is idle.
pub fn check_immediate_service(trace: &Trace, workload: &Workload, params: &CostParams) -> Check {
    let mut boundaries: Vec<(f64, f64)> = Vec::new();
    for e in &trace.events {
        match e.kind {
            EventKind::IterationCompleted { .. } => boundaries.push((e.time, 0.0)),
            EventKind::ShuffleExecuted { duration, .. } => {
                if let Some(b) = boundaries.last_mut() {
                    b.1 += duration;
                }
            }
            _ => {}
        }
    }
    for r in workload.requests() {
        let ready = r.arrival_time + params.preprocess_ms;
        let fused = trace
            .events_for(r.id)
            .find(|e| matches!(e.kind, EventKind::Fused { .. }))
            .ok_or(format!("{} never fused", r.id))?
            .time;
        if fused + EPS < ready {
            return Err(format!("{} fused at {fused} before ready {ready}", r.id));
        }
        let bound = match boundaries.iter().find(|(t, _)| *t + EPS >= ready) {
            Some(&(t, shuffle)) => t + shuffle,
            None => ready,
        };
        if fused > bound.max(ready) + EPS * bound.max(1.0) {
            return Err(format!("{} ready {ready} but fused {fused}, next boundary done {bound}", r.id));
        }
    }
    Ok(())
}

/// Runs with the observer and checks the window after every boundary.
pub fn check_layout_after_boundaries(scenario: &Scenario, seed: u64) -> Check {
    let workload = scenario.workload(seed).map_err(|e| e.to_string())?;
    let mut failure = None;
    run_fusion_observed(&workload, &scenario.params, &scenario.tp, Compaction::Shuffle, |state| {
        if failure.is_some() {
            return;
        }
        if !state.layout.is_contiguous() {
            failure = Some(format!("non-contiguous window at {}: {:?}", state.now, state.layout.slots()));
        } else if state.active.len() != state.layout.occupied_count() {
            failure = Some(format!("{} active but {} occupied", state.active.len(), state.layout.occupied_count()));
        } else if let Some(id) = state.active.keys().find(|id| state.layout.offset_of(**id).is_none()) {
            failure = Some(format!("{id} active without a slot"));
        }
    })
    .map_err(|e| e.to_string())?;
    failure.map_or(Ok(()), Err)
}

fn occupants(layout: &BufferLayout) -> BTreeMap<RequestId, u64> {
    layout
        .slots()
        .iter()
        .filter_map(|s| match *s {
            Slot::Occupied { request, size } => Some((request, size)),
            Slot::Empty { .. } => None,
        })
        .collect()
}

/// Bytes moved by sliding every occupant left to pack from the window start.
pub fn naive_left_compaction_bytes(layout: &BufferLayout) -> u64 {
    let (start, len) = (layout.buffer_offset(), layout.buffer_size());
    let mut dst = start;
    let mut moved = 0;
    for (i, s) in layout.slots().iter().enumerate().skip(start).take(len) {
        if let Slot::Occupied { size, .. } = *s {
            if i != dst {
                moved += size;
            }
            dst += 1;
        }
    }
    moved
}

/// Plan/apply keeps the occupant multiset, ends contiguous, and never
/// moves more than naive left-compaction.
pub fn check_shuffle(layout: &BufferLayout) -> Check {
    let before = occupants(layout);
    let naive = naive_left_compaction_bytes(layout);
    let mut after = layout.clone();
    let plan = after.plan_shuffle();
    after.apply_shuffle(&plan).map_err(|e| e.to_string())?;
    if occupants(&after) != before {
        return Err(format!("occupants changed: {before:?} -> {:?}", occupants(&after)));
    }
    if !after.is_contiguous() {
        return Err(format!("not contiguous after shuffle: {:?}", after.slots()));
    }
    if plan.total_bytes_moved != plan.moves.iter().map(|m| m.bytes).sum::<u64>() {
        return Err("total_bytes_moved disagrees with moves".into());
    }
    if plan.total_bytes_moved > naive {
        return Err(format!("moved {} bytes, naive left-compaction moves {naive}", plan.total_bytes_moved));
    }
    Ok(())
}

pub fn makespan(trace: &Trace) -> f64 {
    let first = trace.events.first().map_or(0.0, |e| e.time);
    trace.events.iter().filter(|e| matches!(e.kind, EventKind::Evicted)).map(|e| e.time).fold(first, f64::max) - first
}

pub fn check_shuffle_dominance(scenario: &Scenario, seed: u64) -> Check {
    let on = scenario.clone().with_discipline(Discipline::Fusion).run(seed).map_err(|e| e.to_string())?;
    let off = scenario.clone().with_discipline(Discipline::FusionNoShuffle).run(seed).map_err(|e| e.to_string())?;
    let (a, b) = (makespan(&on), makespan(&off));
    if a > b * (1.0 + EPS) {
        return Err(format!("shuffle on {a} > shuffle off {b}"));
    }
    Ok(())
}

pub fn check_determinism(scenario: &Scenario, seed: u64) -> Check {
    let a = scenario.run(seed).map_err(|e| e.to_string())?.log_string();
    let b = scenario.run(seed).map_err(|e| e.to_string())?.log_string();
    if a != b {
        return Err("trace differs between identical runs".into());
    }
    let suite = SuiteConfig { seeds: vec![seed, seed + 1], scenarios: vec![scenario.clone()] };
    let csv = || {
        let mut out = Vec::new();
        write_csv(&run_suite(&suite), &mut out).map(|_| out)
    };
    if csv().map_err(|e| e.to_string())? != csv().map_err(|e| e.to_string())? {
        return Err("CSV differs between identical runs".into());
    }
    Ok(())
}

/// All trace-level fusion invariants for one scenario instance.
pub fn check_fusion_scenario(scenario: &Scenario, seed: u64) -> Check {
    let workload = scenario.workload(seed).map_err(|e| e.to_string())?;
    let trace = scenario.run(seed).map_err(|e| e.to_string())?;
    check_atomicity(&trace)?;
    check_token_conservation(&trace, &workload)?;
    check_phase_order(&trace, &workload)?;
    if scenario.discipline == Discipline::Fusion {
        check_immediate_service(&trace, &workload, &scenario.params)?;
        check_layout_after_boundaries(scenario, seed)?;
    }
    Ok(())
}

pub fn arb_arrival() -> impl Strategy<Value = ArrivalSpec> {
    prop_oneof![
        (0.0f64..3000.0).prop_map(|interval_ms| ArrivalSpec::Constant { interval_ms }),
        (1.0f64..3000.0).prop_map(|mean_interval_ms| ArrivalSpec::Poisson { mean_interval_ms }),
    ]
}

pub fn arb_tp() -> impl Strategy<Value = TpConfig> {
    (1u32..=4, prop::bool::ANY)
        .prop_map(|(n, inter)| TpConfig::new(n, if inter { Placement::Inter } else { Placement::Intra }))
}

pub fn arb_params() -> impl Strategy<Value = CostParams> {
    (1.0f64..20.0, 0.0f64..2.0, 1u32..6, 0.0f64..30.0, 0.0f64..2.0).prop_map(
        |(base, marginal, capacity, preprocess, gamma)| CostParams {
            base_iteration_ms: base,
            marginal_per_request_ms: marginal,
            capacity,
            preprocess_ms: preprocess,
            contention_gamma: gamma,
            ..CostParams::default()
        },
    )
}

/// Small fusion scenarios: up to 12 requests of up to 96 tokens.
pub fn arb_scenario() -> impl Strategy<Value = Scenario> {
    (
        1usize..=12,
        arb_arrival(),
        1u32..=48,
        0u32..=48,
        1u32..=3,
        arb_tp(),
        arb_params(),
        prop_oneof![Just(Discipline::Fusion), Just(Discipline::FusionNoShuffle), Just(Discipline::FusionTrimOnly)],
    )
        .prop_map(|(n, arrival, min, spread, batch, tp, params, discipline)| {
            let mut s = Scenario::new("prop", discipline, n, arrival)
                .with_lengths(temporal_fusion::LengthDistribution::Uniform { min, max: min + spread })
                .with_tp(tp)
                .with_params(params);
            s.batch_size = batch;
            s
        })
}

/// Scenarios where orphans cost something: tp >= 2 or compute beyond capacity.
pub fn arb_dominance_scenario() -> impl Strategy<Value = Scenario> {
    (arb_scenario(), 2u32..=4).prop_map(|(mut s, tp)| {
        s.tp.tp_size = tp;
        s.with_discipline(Discipline::Fusion)
    })
}

/// Layouts with arbitrary holes and sizes; empty slots keep a size too.
pub fn arb_layout() -> impl Strategy<Value = BufferLayout> {
    prop::collection::vec((prop::bool::ANY, 1u64..=100), 0..40).prop_map(|cells| {
        let slots =
            cells
                .into_iter()
                .enumerate()
                .map(|(i, (occupied, size))| {
                    if occupied {
                        Slot::Occupied { request: RequestId(i as u32), size }
                    } else {
                        Slot::Empty { size }
                    }
                })
                .collect();
        BufferLayout::from_slots(slots).expect("distinct ids and positive sizes")
    })
}
