use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use temporal_fusion::buffer::{exhaustive_binary_check, random_weighted_check};
use temporal_fusion::experiments::config::ParamFile;
use temporal_fusion::experiments::{calibrate, run_suite, write_csv, Anchors, SuiteConfig};
use temporal_fusion::{CostParams, Error, Result};

#[derive(Parser)]
#[command(name = "tfsim", version, about = "Temporal-fusion serving simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suite config (run, trace) or base parameter file (calibrate).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replaces the config's seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a suite and write CSV.
    Run,
    /// Fit the contention coefficient and write a parameter file.
    Calibrate,
    /// Check the window search against the brute-force oracle.
    Oracle,
    /// Write the event log of one scenario.
    Trace {
        /// Scenario name; defaults to the first one in the config.
        #[arg(long)]
        scenario: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors count as configuration errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tfsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run => run(cli),
        Command::Calibrate => calibrate_cmd(cli),
        Command::Oracle => oracle(cli),
        Command::Trace { scenario } => trace(cli, scenario.as_deref()),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_suite(cli: &Cli) -> Result<SuiteConfig> {
    let path = cli.config.as_deref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut suite = SuiteConfig::load(path)?;
    if let Some(seed) = cli.seed {
        suite.seeds = vec![seed];
    }
    Ok(suite)
}

fn run(cli: &Cli) -> Result<()> {
    let suite = load_suite(cli)?;
    if cli.verbose {
        eprintln!("{} scenario runs x {} seeds", suite.scenarios.len(), suite.seeds.len());
    }
    let rows = run_suite(&suite);
    let mut out = output(cli.out.as_deref())?;
    write_csv(&rows, &mut out)?;
    out.flush()?;
    let errors: Vec<_> = rows.iter().filter(|r| r.row_type == "error").collect();
    if cli.verbose {
        for r in rows.iter().filter(|r| r.row_type == "summary") {
            eprintln!(
                "{} {}: makespan {:.1} ms, speedup {}",
                r.scenario,
                r.discipline,
                r.makespan_ms.unwrap_or(f64::NAN),
                r.speedup.map_or("-".to_string(), |s| format!("{s:.2}x"))
            );
        }
    }
    match errors.first() {
        None => Ok(()),
        Some(r) => Err(Error::RunFailed(format!(
            "{} failed run(s); first: {} {} seed {:?}: {}",
            errors.len(),
            r.scenario,
            r.discipline,
            r.seed,
            r.error.as_deref().unwrap_or("")
        ))),
    }
}

fn calibrate_cmd(cli: &Cli) -> Result<()> {
    let base = match &cli.config {
        Some(p) => ParamFile::load(p)?,
        None => CostParams::default(),
    };
    let mut anchors = Anchors::default();
    if let Some(seed) = cli.seed {
        anchors.seeds = (seed..seed + anchors.seeds.len() as u64).collect();
    }
    let fit = calibrate(&anchors, &base)?;
    if cli.verbose {
        eprintln!("gamma {:.6}, speedup {:.4} (target {})", fit.gamma, fit.achieved_speedup, anchors.speedup_target);
    }
    let mut out = output(cli.out.as_deref())?;
    out.write_all(ParamFile::render(&fit.params).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn oracle(cli: &Cli) -> Result<()> {
    let binary = exhaustive_binary_check(14);
    let weighted = random_weighted_check(1000, 64, 100, cli.seed.unwrap_or(0));
    let mut out = output(cli.out.as_deref())?;
    writeln!(out, "binary\t{}\t{}", binary.cases, binary.mismatches.len())?;
    writeln!(out, "weighted\t{}\t{}", weighted.cases, weighted.mismatches.len())?;
    out.flush()?;
    if cli.verbose {
        for m in binary.mismatches.iter().chain(&weighted.mismatches).take(10) {
            eprintln!("mismatch: {m:?}");
        }
    }
    let bad = binary.mismatches.len() + weighted.mismatches.len();
    if bad > 0 {
        return Err(Error::RunFailed(format!("{bad} oracle mismatches")));
    }
    Ok(())
}

fn trace(cli: &Cli, name: Option<&str>) -> Result<()> {
    let suite = load_suite(cli)?;
    let name = name.unwrap_or(&suite.scenarios[0].name);
    let chosen: Vec<_> = suite.scenarios.iter().filter(|s| s.name == name).collect();
    if chosen.is_empty() {
        return Err(Error::Config(format!("no scenario named '{name}'")));
    }
    let seed = suite.seeds[0];
    let mut out = output(cli.out.as_deref())?;
    for s in chosen {
        let trace = s.run(seed)?;
        if cli.verbose {
            eprintln!("{} {} seed {seed}: {} events", s.name, s.discipline, trace.events.len());
        }
        trace.write_log(&mut out)?;
    }
    out.flush()?;
    Ok(())
}
