// Event log of three short requests, one arriving mid-iteration.
//
// `cargo run --example event_trace`

use temporal_fusion::{
    compute_metrics, run_fusion, Compaction, CostParams, Request, Result, TpConfig, Trace, Workload,
};

pub fn run_example() -> Result<Trace> {
    let w =
        Workload::new(vec![Request::new(0, 0.0, 4), Request::new(1, 5.0, 6).with_eos_at(3), Request::new(2, 30.0, 2)])?;
    let params = CostParams { base_iteration_ms: 10.0, preprocess_ms: 2.0, ..CostParams::default() };
    let trace = run_fusion(&w, &params, &TpConfig::single(), Compaction::Shuffle)?;
    print!("{}", trace.log_string());
    let m = compute_metrics(&trace, w.len())?;
    println!(
        "makespan {} ms, {} iterations, latencies {:?}",
        m.makespan, m.total_stream_iterations, m.per_request_latency
    );
    Ok(trace)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
