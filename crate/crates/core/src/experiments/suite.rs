//! Runs every (scenario, seed) cell of a suite and lays the results out as CSV.
//!
//! Column order is fixed by [`CsvRow`]. `row_type` is one of `data`,
//! `summary` (mean over the scenario's successful seeds, with `*_std`
//! columns holding the sample standard deviation) or `error`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::config::SuiteConfig;
use super::scenario::Scenario;
use crate::arrivals::LengthDistribution;
use crate::error::Result;
use crate::metrics::Metrics;
use crate::trace::Discipline;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub row_type: &'static str,
    pub scenario: String,
    pub discipline: &'static str,
    pub seed: Option<u64>,
    pub n_requests: usize,
    pub arrival: &'static str,
    pub arrival_interval_ms: f64,
    pub lengths: String,
    pub tp_size: u32,
    pub placement: &'static str,
    pub makespan_ms: Option<f64>,
    pub mean_latency_ms: Option<f64>,
    pub p50_latency_ms: Option<f64>,
    pub p99_latency_ms: Option<f64>,
    pub total_stream_iterations: Option<f64>,
    pub overlap_percent: Option<f64>,
    pub bytes_shuffled: Option<f64>,
    pub shuffle_count: Option<f64>,
    /// This discipline's makespan over fusion's on the same seed.
    pub speedup: Option<f64>,
    pub makespan_std: Option<f64>,
    pub mean_latency_std: Option<f64>,
    pub iterations_std: Option<f64>,
    pub overlap_std: Option<f64>,
    pub speedup_std: Option<f64>,
    pub error: Option<String>,
}

impl CsvRow {
    fn base(s: &Scenario, row_type: &'static str, seed: Option<u64>) -> Self {
        Self {
            row_type,
            scenario: s.name.clone(),
            discipline: s.discipline.name(),
            seed,
            n_requests: s.n_requests,
            arrival: s.arrival.label(),
            arrival_interval_ms: s.arrival.interval_ms(),
            lengths: match s.lengths {
                LengthDistribution::Fixed { tokens } => format!("fixed:{tokens}"),
                LengthDistribution::Uniform { min, max } => format!("uniform:{min}-{max}"),
            },
            tp_size: s.tp.tp_size,
            placement: match s.tp.placement {
                crate::cost::Placement::Intra => "intra",
                crate::cost::Placement::Inter => "inter",
            },
            makespan_ms: None,
            mean_latency_ms: None,
            p50_latency_ms: None,
            p99_latency_ms: None,
            total_stream_iterations: None,
            overlap_percent: None,
            bytes_shuffled: None,
            shuffle_count: None,
            speedup: None,
            makespan_std: None,
            mean_latency_std: None,
            iterations_std: None,
            overlap_std: None,
            speedup_std: None,
            error: None,
        }
    }

    fn data(s: &Scenario, seed: u64, m: &Metrics, speedup: Option<f64>) -> Self {
        Self {
            makespan_ms: Some(m.makespan),
            mean_latency_ms: Some(m.mean_latency),
            p50_latency_ms: Some(m.p50_latency),
            p99_latency_ms: Some(m.p99_latency),
            total_stream_iterations: Some(m.total_stream_iterations as f64),
            overlap_percent: Some(m.overlap_percent),
            bytes_shuffled: Some(m.bytes_shuffled as f64),
            shuffle_count: Some(m.shuffle_count as f64),
            speedup,
            ..Self::base(s, "data", Some(seed))
        }
    }

    fn summary(s: &Scenario, rows: &[&CsvRow]) -> Self {
        let col = |f: fn(&CsvRow) -> Option<f64>| -> Vec<f64> { rows.iter().filter_map(|r| f(r)).collect() };
        let makespan = col(|r| r.makespan_ms);
        let latency = col(|r| r.mean_latency_ms);
        let iterations = col(|r| r.total_stream_iterations);
        let overlap = col(|r| r.overlap_percent);
        let speedup = col(|r| r.speedup);
        Self {
            makespan_ms: mean(&makespan),
            mean_latency_ms: mean(&latency),
            p50_latency_ms: mean(&col(|r| r.p50_latency_ms)),
            p99_latency_ms: mean(&col(|r| r.p99_latency_ms)),
            total_stream_iterations: mean(&iterations),
            overlap_percent: mean(&overlap),
            bytes_shuffled: mean(&col(|r| r.bytes_shuffled)),
            shuffle_count: mean(&col(|r| r.shuffle_count)),
            speedup: mean(&speedup),
            makespan_std: std_dev(&makespan),
            mean_latency_std: std_dev(&latency),
            iterations_std: std_dev(&iterations),
            overlap_std: std_dev(&overlap),
            speedup_std: std_dev(&speedup),
            ..Self::base(s, "summary", None)
        }
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation; zero for a single observation.
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}

/// Evaluates every scenario on every seed. Failures become `error` rows;
/// nothing is dropped.
pub fn run_suite(config: &SuiteConfig) -> Vec<CsvRow> {
    let results: Vec<Vec<Result<Metrics>>> =
        config.scenarios.iter().map(|s| config.seeds.iter().map(|&seed| s.evaluate(seed)).collect()).collect();

    // fusion makespan per (scenario name, seed), for speedups
    let mut fusion: BTreeMap<(&str, u64), f64> = BTreeMap::new();
    for (s, per_seed) in config.scenarios.iter().zip(&results) {
        if s.discipline == Discipline::Fusion {
            for (&seed, r) in config.seeds.iter().zip(per_seed) {
                if let Ok(m) = r {
                    fusion.insert((s.name.as_str(), seed), m.makespan);
                }
            }
        }
    }

    let mut rows = Vec::new();
    for (s, per_seed) in config.scenarios.iter().zip(&results) {
        let mut data = Vec::new();
        for (&seed, r) in config.seeds.iter().zip(per_seed) {
            match r {
                Ok(m) => {
                    let speedup = match s.discipline {
                        Discipline::Fusion => None,
                        _ => fusion.get(&(s.name.as_str(), seed)).map(|f| m.makespan / f),
                    };
                    data.push(CsvRow::data(s, seed, m, speedup));
                }
                Err(e) => {
                    let mut row = CsvRow::base(s, "error", Some(seed));
                    row.error = Some(e.to_string());
                    data.push(row);
                }
            }
        }
        let ok: Vec<&CsvRow> = data.iter().filter(|r| r.row_type == "data").collect();
        let summary = CsvRow::summary(s, &ok);
        rows.extend(data);
        rows.push(summary);
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
