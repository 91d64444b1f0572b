// Eight 512-token requests at fixed intervals under all three disciplines.
//
// `cargo run --example constant_interval`

use temporal_fusion::arrivals::overlap_ratio;
use temporal_fusion::experiments::{ArrivalSpec, Scenario};
use temporal_fusion::{Discipline, Result};

pub fn run_example() -> Result<Vec<(f64, f64, f64)>> {
    let mut rows = Vec::new();
    println!("{:>8} {:>9} {:>12} {:>12} {:>12}", "tau_ms", "overlap", "fusion_ms", "batching_ms", "instances_ms");
    for tau in [500.0, 2500.0, 5000.0] {
        let base =
            Scenario::new(format!("tau{tau}"), Discipline::Fusion, 8, ArrivalSpec::Constant { interval_ms: tau });
        let fusion = base.evaluate(0)?.makespan;
        let batching = base.clone().with_discipline(Discipline::DynamicBatching).evaluate(0)?.makespan;
        let instances = base.clone().with_discipline(Discipline::ConcurrentInstances).evaluate(0)?.makespan;
        println!(
            "{tau:>8} {:>8.1}% {fusion:>12.1} {batching:>12.1} {instances:>12.1}",
            overlap_ratio(6000.0, tau)? * 100.0
        );
        rows.push((tau, batching / fusion, instances / fusion));
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
