use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rvmrls::terrain::synthesize;
use rvmrls_bench::config::{load_scenario, ExperimentConfig};
use rvmrls_bench::output::{read_reports, tables_by_scenario};
use rvmrls_bench::table::aggregate;
use rvmrls_bench::{run_experiments, BenchError, RunOptions};

/// Benchmark runner for the variable-memory RLS filter and its baselines.
#[derive(Debug, Parser)]
#[command(name = "rvmrls-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every scenario x algorithm x seed cell of an experiment config.
    Run {
        config: PathBuf,
        /// Output directory. Falls back to the config's `output_dir`, then `results`.
        #[arg(long, env = "RVMRLS_BENCH_OUT")]
        out: Option<PathBuf>,
        /// Worker threads for the cell runs (timing always runs on one thread).
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Run a single seed instead of the configured list.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Skip per-step trace files.
        #[arg(long)]
        no_traces: bool,
        /// Skip runtime measurement.
        #[arg(long)]
        no_timing: bool,
    },
    /// Print median tables from a reports.csv.
    Table { reports: PathBuf },
    /// Write one synthesized scenario as CSV.
    Synth {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<BenchError>() {
        Some(BenchError::Config(_)) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run { config, out, workers, seed_override, no_traces, no_timing } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed_override {
                cfg.seeds = vec![seed];
            }
            if no_traces {
                cfg.emit_traces = false;
            }
            if no_timing {
                cfg.timing = false;
            }
            let out_dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| "results".into());
            let manifest = run_experiments(&cfg, &RunOptions { out_dir: out_dir.clone(), workers })?;
            let reports = read_reports(&out_dir.join("reports.csv"))?;
            if !reports.is_empty() {
                for (_, text) in tables_by_scenario(&aggregate(&reports))? {
                    println!("{text}");
                }
            }
            let failed = manifest.failed_cells();
            for c in manifest.cells.iter().filter(|c| c.message.is_some()) {
                eprintln!(
                    "cell {}/{}/seed {} failed: {}",
                    c.scenario,
                    c.algorithm,
                    c.seed,
                    c.message.as_deref().unwrap_or_default()
                );
            }
            println!("results written to {}", out_dir.display());
            Ok(if failed > 0 { EXIT_FAILURE } else { 0 })
        }
        Command::Table { reports } => {
            let rows = read_reports(&reports)
                .with_context(|| format!("reading {}", reports.display()))?;
            if rows.is_empty() {
                anyhow::bail!(BenchError::InvalidInput("no reports to tabulate".into()));
            }
            for (_, text) in tables_by_scenario(&aggregate(&rows))? {
                println!("{text}");
            }
            Ok(0)
        }
        Command::Synth { scenario, out } => {
            let cfg = load_scenario(&scenario)?;
            let trace = synthesize(&cfg)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let file = std::fs::File::create(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let mut w = std::io::BufWriter::new(file);
            trace.write_csv(&mut w)?;
            std::io::Write::flush(&mut w)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
