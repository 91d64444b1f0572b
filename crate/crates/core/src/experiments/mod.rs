//! Scenario definitions, suite execution with CSV output, and calibration of
//! the cost model against reference anchors.

pub mod calibrate;
pub mod config;
pub mod scenario;
pub mod suite;

pub use calibrate::{calibrate, speedup, Anchors, Calibration};
pub use config::SuiteConfig;
pub use scenario::{ArrivalSpec, Scenario};
pub use suite::{run_suite, write_csv, CsvRow};
