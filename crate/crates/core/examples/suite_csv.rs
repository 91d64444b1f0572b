// Runs the bundled suite config and prints CSV.
//
// `cargo run --example suite_csv`

use std::path::Path;

use temporal_fusion::experiments::{run_suite, write_csv, CsvRow, SuiteConfig};
use temporal_fusion::Result;

pub fn run_example() -> Result<Vec<CsvRow>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example_suite.toml");
    let mut suite = SuiteConfig::load(&path)?;
    suite.seeds.truncate(2);
    let rows = run_suite(&suite);
    write_csv(&rows, std::io::stdout().lock())?;
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
