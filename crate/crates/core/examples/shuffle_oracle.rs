// The sliding-window region search against exhaustive enumeration.
//
// `cargo run --release --example shuffle_oracle`

use temporal_fusion::buffer::{
    brute_force_min_window, exhaustive_binary_check, find_shuffled_memory_region, min_cost_window,
    random_weighted_check,
};
use temporal_fusion::Result;

pub fn run_example() -> Result<usize> {
    let occupancy = [1, 0, 1, 1, 0, 0, 1, 1];
    let (offset, cost) = min_cost_window(&occupancy);
    println!("occupancy {occupancy:?}: region starts at {} (cost {cost})", find_shuffled_memory_region(&occupancy));
    assert_eq!((offset, cost), brute_force_min_window(&occupancy)?);

    let binary = exhaustive_binary_check(12);
    let weighted = random_weighted_check(500, 64, 100, 7);
    println!("binary arrays: {} checked, {} mismatches", binary.cases, binary.mismatches.len());
    println!("weighted arrays: {} checked, {} mismatches", weighted.cases, weighted.mismatches.len());
    Ok(binary.mismatches.len() + weighted.mismatches.len())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
