// Orphaned slots, the minimum-move compaction plan, and what it buys.
//
// `cargo run --example memory_shuffle`

use temporal_fusion::experiments::{ArrivalSpec, Scenario};
use temporal_fusion::{BufferLayout, Discipline, LengthDistribution, Placement, RequestId, Result, TpConfig};

pub fn run_example() -> Result<f64> {
    let mut layout = BufferLayout::new();
    for id in 0..6 {
        layout.fuse_request(RequestId(id), 64)?;
    }
    layout.evict_request(RequestId(1))?;
    layout.evict_request(RequestId(2))?;
    layout.evict_request(RequestId(4))?;
    layout.trim_boundaries();
    println!("before: {:?}", layout.slots());

    let plan = layout.plan_shuffle();
    for mv in &plan.moves {
        println!("  move {} slot {} -> {} ({} bytes)", mv.request, mv.src_slot, mv.dst_slot, mv.bytes);
    }
    layout.apply_shuffle(&plan)?;
    println!("after:  window {:?}, contiguous {}", layout.live_window(), layout.is_contiguous());

    let on = Scenario::new("spread", Discipline::Fusion, 16, ArrivalSpec::Constant { interval_ms: 20.0 })
        .with_lengths(LengthDistribution::Uniform { min: 128, max: 1792 })
        .with_tp(TpConfig::new(2, Placement::Intra));
    let with = on.evaluate(0)?;
    let without = on.clone().with_discipline(Discipline::FusionNoShuffle).evaluate(0)?;
    let ratio = without.makespan / with.makespan;
    println!(
        "16 requests, lengths 128..=1792, tp=2: {} shuffles moved {} MiB; makespan {:.0} ms vs {:.0} ms without ({ratio:.2}x)",
        with.shuffle_count,
        with.bytes_shuffled >> 20,
        with.makespan,
        without.makespan
    );
    Ok(ratio)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
