// Fits the contention coefficient, then sweeps the mean Poisson interval.
//
// `cargo run --release --example poisson_sweep`

use temporal_fusion::experiments::{calibrate, speedup, Anchors, ArrivalSpec, Scenario};
use temporal_fusion::{CostParams, Discipline, LengthDistribution, Result};

pub fn run_example() -> Result<Vec<(f64, f64)>> {
    let anchors = Anchors { seeds: (0..5).collect(), ..Anchors::default() };
    let fit = calibrate(&anchors, &CostParams::default())?;
    println!("gamma = {:.4} (speedup {:.2}x at 20 ms)", fit.gamma, fit.achieved_speedup);

    let mut curve = Vec::new();
    println!("{:>8} {:>9} {:>10} {:>9}", "lambda", "speedup", "iters", "overlap");
    for lambda in [20.0, 100.0, 500.0, 1000.0, 5000.0] {
        let arrival = ArrivalSpec::Poisson { mean_interval_ms: lambda };
        let s = speedup(&fit.params, &Anchors { arrival, ..anchors.clone() })?;
        let m = Scenario::new("sweep", Discipline::Fusion, 32, arrival)
            .with_lengths(LengthDistribution::Fixed { tokens: 512 })
            .with_params(fit.params)
            .evaluate(0)?;
        println!("{lambda:>8} {s:>8.2}x {:>10} {:>8.1}%", m.total_stream_iterations, m.overlap_percent * 100.0);
        curve.push((lambda, s));
    }
    Ok(curve)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
