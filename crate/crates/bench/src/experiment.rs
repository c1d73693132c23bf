//! Seeded experiment matrix: scenario x algorithm x seed.
//!
//! Cells run on a rayon pool. Runtime measurements happen afterwards on the
//! calling thread, one cell at a time, and all files are written by
//! [`crate::output::write_all`] once every cell has finished.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use rayon::prelude::*;
use rvmrls::metrics::{time_step, MetricsReport};
use rvmrls::terrain::{synthesize, ScenarioConfig, ScenarioTrace};
use rvmrls::FilterOutput;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::BenchError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellState {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    pub scenario: String,
    pub algorithm: String,
    pub seed: u64,
    pub status: CellState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub cells: Vec<CellStatus>,
}

impl RunManifest {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.status == CellState::Error).count()
    }
}

/// Filter outputs and scores of one successful cell.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub report: MetricsReport,
    pub outputs: Vec<FilterOutput>,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub scenario: usize,
    pub algorithm: usize,
    pub seed: u64,
    pub result: Result<CellRun, String>,
}

/// Everything a run produced, before it is written out.
#[derive(Debug)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub manifest: RunManifest,
    pub cells: Vec<Cell>,
    /// Keyed by (scenario index, seed).
    pub traces: BTreeMap<(usize, u64), ScenarioTrace>,
}

impl ExperimentRun {
    pub fn reports(&self) -> Vec<MetricsReport> {
        self.cells.iter().filter_map(|c| c.result.as_ref().ok()).map(|r| r.report.clone()).collect()
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn scenario_for(cfg: &ExperimentConfig, index: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig { seed, ..cfg.scenarios[index].scenario.clone() }
}

fn run_cell(
    cfg: &ExperimentConfig,
    trace: &ScenarioTrace,
    scenario: usize,
    algorithm: usize,
    seed: u64,
) -> Result<CellRun, String> {
    let spec = cfg.algorithms[algorithm].spec.with_seed(seed);
    let samples = trace.samples();
    let n0 = spec.init_window();
    let outputs = spec.run(&samples).map_err(|e| e.to_string())?;
    let estimates: Vec<f64> = outputs.iter().map(|o| o.estimate).collect();
    let sc = &cfg.scenarios[scenario];
    let report = MetricsReport::score(
        &cfg.algorithms[algorithm].name,
        &sc.name,
        seed,
        &estimates,
        &trace.reference[n0.min(trace.len())..],
        sc.scenario.noise_variance,
    )
    .map_err(|e| e.to_string())?;
    Ok(CellRun { report, outputs })
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".into()
    }
}

/// Runs every cell; a failing cell is recorded and the others carry on.
pub fn run_matrix(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentRun, BenchError> {
    cfg.validate()?;
    let started_at = now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::InvalidInput(e.to_string()))?;

    let keys: Vec<(usize, u64)> = (0..cfg.scenarios.len())
        .flat_map(|s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let traces: Vec<Result<ScenarioTrace, String>> = pool.install(|| {
        keys.par_iter()
            .map(|&(s, seed)| synthesize(&scenario_for(cfg, s, seed)).map_err(|e| e.to_string()))
            .collect()
    });
    let traces: BTreeMap<(usize, u64), Result<ScenarioTrace, String>> =
        keys.into_iter().zip(traces).collect();

    let plan: Vec<(usize, usize, u64)> = (0..cfg.scenarios.len())
        .flat_map(|s| {
            (0..cfg.algorithms.len())
                .flat_map(move |a| cfg.seeds.iter().map(move |&seed| (s, a, seed)))
        })
        .collect();
    let mut cells: Vec<Cell> = pool.install(|| {
        plan.par_iter()
            .map(|&(s, a, seed)| {
                let result = match &traces[&(s, seed)] {
                    Ok(trace) => catch_unwind(AssertUnwindSafe(|| run_cell(cfg, trace, s, a, seed)))
                        .unwrap_or_else(|p| Err(panic_message(p))),
                    Err(e) => Err(format!("scenario synthesis failed: {e}")),
                };
                Cell { scenario: s, algorithm: a, seed, result }
            })
            .collect()
    });

    // serial timing pass on this thread only
    if cfg.timing {
        for cell in cells.iter_mut() {
            let Ok(run) = cell.result.as_mut() else { continue };
            let Ok(trace) = &traces[&(cell.scenario, cell.seed)] else { continue };
            let spec = cfg.algorithms[cell.algorithm].spec.with_seed(cell.seed);
            let samples = trace.samples();
            let n0 = spec.init_window();
            match time_step(|| spec.build(&samples[..n0]), &samples[n0..], cfg.timing_repeats) {
                Ok(sr) => run.report.sr_ms = Some(sr),
                Err(e) => cell.result = Err(format!("timing failed: {e}")),
            }
        }
    }

    let statuses = cells
        .iter()
        .map(|c| CellStatus {
            scenario: cfg.scenarios[c.scenario].name.clone(),
            algorithm: cfg.algorithms[c.algorithm].name.clone(),
            seed: c.seed,
            status: if c.result.is_ok() { CellState::Ok } else { CellState::Error },
            message: c.result.as_ref().err().cloned(),
        })
        .collect();
    let manifest = RunManifest {
        config_hash: cfg.hash(),
        tool_version: TOOL_VERSION.to_string(),
        started_at,
        finished_at: now(),
        cells: statuses,
    };
    let traces = traces.into_iter().filter_map(|(k, v)| v.ok().map(|t| (k, t))).collect();
    Ok(ExperimentRun { config: cfg.clone(), manifest, cells, traces })
}

/// Runs the matrix and writes reports, tables, traces, figure data and the manifest.
pub fn run_experiments(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest, BenchError> {
    let mut run = run_matrix(cfg, opts.workers)?;
    crate::output::write_all(&run, &opts.out_dir)?;
    run.manifest.finished_at = now();
    crate::output::write_manifest(&run.manifest, &opts.out_dir)?;
    Ok(run.manifest)
}
