// Dynamic batching with a 500 ms window: a late arrival waits for the
// running batch, while fusion admits it at the next iteration boundary.
//
// `cargo run --example batching_window`

use temporal_fusion::baselines::pack_batches;
use temporal_fusion::{
    run_dynamic_batching, run_fusion, BatchWindowConfig, Compaction, CostParams, EventKind, Request, RequestId, Result,
    TpConfig, Workload,
};

pub fn run_example() -> Result<(f64, f64)> {
    let w = Workload::new(vec![Request::new(0, 0.0, 64), Request::new(1, 100.0, 64), Request::new(2, 510.0, 64)])?;
    let params = CostParams::default();
    let cfg = BatchWindowConfig { window_ms: 500.0, max_batch: 32 };
    for (i, b) in pack_batches(&w, &cfg).iter().enumerate() {
        let ids: Vec<String> = b.members.iter().map(|r| r.id.to_string()).collect();
        println!("batch {i}: requests [{}], window closes at {} ms", ids.join(", "), b.close_time);
    }

    let fused_at = |trace: &temporal_fusion::Trace| {
        trace.events_for(RequestId(2)).find(|e| matches!(e.kind, EventKind::Fused { .. })).map_or(f64::NAN, |e| e.time)
    };
    let batched = fused_at(&run_dynamic_batching(&w, &params, &TpConfig::single(), &cfg)?);
    let fused = fused_at(&run_fusion(&w, &params, &TpConfig::single(), Compaction::Shuffle)?);
    println!("request 2 arrives at 510 ms; starts at {batched:.1} ms batched, {fused:.1} ms fused");
    Ok((batched, fused))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
