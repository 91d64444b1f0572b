// Iteration cost under tensor parallelism, intra- and inter-node. Compute is
// not divided across shards in this model; only collective cost changes.
//
// `cargo run --example tensor_parallel`

use temporal_fusion::experiments::{ArrivalSpec, Scenario};
use temporal_fusion::{CostParams, Discipline, Placement, Result, TpConfig};

pub fn run_example() -> Result<Vec<(u32, Placement, f64)>> {
    let params = CostParams::default();
    let live = params.tensor_size(1) * 8;
    let mut rows = Vec::new();
    println!("{:>3} {:>6} {:>12} {:>14}", "tp", "place", "iter_ms", "makespan_ms");
    for placement in [Placement::Intra, Placement::Inter] {
        for size in [1, 2, 4, 8] {
            let tp = TpConfig::new(size, placement);
            let iter = params.iteration_time(8, live, &tp)?;
            let makespan = Scenario::new("tp", Discipline::Fusion, 8, ArrivalSpec::Constant { interval_ms: 100.0 })
                .with_tp(tp)
                .evaluate(0)?
                .makespan;
            println!("{size:>3} {:>6} {iter:>12.3} {makespan:>14.1}", format!("{placement:?}").to_lowercase());
            rows.push((size, placement, iter));
        }
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
