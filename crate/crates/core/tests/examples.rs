//! Every example runs and produces the shape of result it advertises.

macro_rules! example {
    ($name:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(constant_interval, "constant_interval.rs");
example!(poisson_sweep, "poisson_sweep.rs");
example!(memory_shuffle, "memory_shuffle.rs");
example!(batching_window, "batching_window.rs");
example!(tensor_parallel, "tensor_parallel.rs");
example!(shuffle_oracle, "shuffle_oracle.rs");
example!(suite_csv, "suite_csv.rs");
example!(event_trace, "event_trace.rs");

#[test]
fn constant_interval_fusion_wins_most_at_short_intervals() {
    let rows = constant_interval::run_example().unwrap();
    assert!(rows[0].2 > rows[2].2);
    assert!(rows.iter().all(|&(_, batching, instances)| batching >= 1.0 && instances >= 1.0));
}

#[test]
fn poisson_sweep_speedup_falls_with_lambda() {
    let curve = poisson_sweep::run_example().unwrap();
    assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1));
}

#[test]
fn memory_shuffle_beats_naive_layout() {
    assert!(memory_shuffle::run_example().unwrap() > 1.0);
}

#[test]
fn batching_window_defers_late_arrival() {
    let (batched, fused) = batching_window::run_example().unwrap();
    assert!(batched > fused);
}

#[test]
fn tensor_parallel_inter_node_costs_more() {
    let rows = tensor_parallel::run_example().unwrap();
    let at = |n, p| rows.iter().find(|r| r.0 == n && r.1 == p).unwrap().2;
    use temporal_fusion::Placement::*;
    assert_eq!(at(1, Intra), at(1, Inter));
    assert!(at(2, Inter) > at(2, Intra));
}

#[test]
fn shuffle_oracle_agrees() {
    assert_eq!(shuffle_oracle::run_example().unwrap(), 0);
}

#[test]
fn suite_csv_has_no_errors() {
    let rows = suite_csv::run_example().unwrap();
    assert!(rows.iter().all(|r| r.row_type != "error"));
}

#[test]
fn event_trace_runs_to_completion() {
    let trace = event_trace::run_example().unwrap();
    assert_eq!(trace.events.iter().filter(|e| e.kind.label() == "evicted").count(), 3);
}
