use std::path::Path;

use rvmrls_bench::experiment::CellState;
use rvmrls_bench::output::read_reports;
use rvmrls_bench::{run_experiments, run_matrix, ExperimentConfig, RunOptions};

const FIVE: &str = r#"
version = 1
seeds = [3]
timing = false

[[scenarios]]
name = "short"
sample_count = 400

[[algorithms]]
name = "LMS"
kind = "lms"

[[algorithms]]
name = "RLS"
kind = "rls"

[[algorithms]]
name = "RVM-RLS"
kind = "rvm-rls"

[[algorithms]]
name = "GVFF-RLS"
kind = "gvff-rls"

[[algorithms]]
name = "PF"
kind = "pf"
particle_count = 100
"#;

fn lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn one_scenario_five_algorithms_one_seed() {
    let cfg = ExperimentConfig::from_toml_str(FIVE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run_experiments(&cfg, &RunOptions { out_dir: dir.path().into(), workers: 2 }).unwrap();
    assert_eq!(m.cells.len(), 5);
    assert_eq!(m.failed_cells(), 0);
    assert_eq!(m.config_hash, cfg.hash());

    let out = dir.path();
    assert_eq!(lines(&out.join("reports.csv")), 6);
    assert_eq!(lines(&out.join("aggregate.csv")), 6);
    let reports = read_reports(&out.join("reports.csv")).unwrap();
    let names: Vec<&str> = reports.iter().map(|r| r.algorithm.as_str()).collect();
    assert_eq!(names, ["LMS", "RLS", "RVM-RLS", "GVFF-RLS", "PF"]);
    assert!(reports.iter().all(|r| r.sr_ms.is_none() && r.seed == 3 && r.scenario_id == "short"));

    let table = std::fs::read_to_string(out.join("table_short.txt")).unwrap();
    assert_eq!(table.lines().count(), 7);

    // 400 samples, 100 for initialisation
    assert_eq!(lines(&out.join("traces/short/seed3.csv")), 401);
    assert_eq!(lines(&out.join("traces/short/seed3_PF.csv")), 301);
    assert_eq!(lines(&out.join("diagnostics_short.csv")), 301);
    let estimates = std::fs::read_to_string(out.join("estimates_short.csv")).unwrap();
    assert_eq!(estimates.lines().next().unwrap(), "t,z,p,LMS,RLS,RVM-RLS,GVFF-RLS,PF");
    assert_eq!(estimates.lines().count(), 301);
    let errors = std::fs::read_to_string(out.join("errors_short.csv")).unwrap();
    assert_eq!(errors.lines().next().unwrap(), "t,LMS,RLS,RVM-RLS,GVFF-RLS,PF");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 5);
    assert_eq!(manifest["tool_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn no_traces_skips_trace_directory() {
    let mut cfg = ExperimentConfig::from_toml_str(FIVE).unwrap();
    cfg.emit_traces = false;
    let dir = tempfile::tempdir().unwrap();
    run_experiments(&cfg, &RunOptions { out_dir: dir.path().into(), workers: 1 }).unwrap();
    assert!(!dir.path().join("traces").exists());
    assert!(dir.path().join("reports.csv").exists());
}

#[test]
fn failing_cell_does_not_stop_the_others() {
    // the second RLS needs more samples than the scenario has
    let text = FIVE.replace(
        "[[algorithms]]\nname = \"GVFF-RLS\"",
        "[[algorithms]]\nname = \"RLS-long\"\nkind = \"rls\"\ninit_window = 500\n\n[[algorithms]]\nname = \"GVFF-RLS\"",
    );
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    let run = run_matrix(&cfg, 3).unwrap();
    assert_eq!(run.manifest.cells.len(), 6);
    assert_eq!(run.manifest.failed_cells(), 1);
    let bad = run.manifest.cells.iter().find(|c| c.status == CellState::Error).unwrap();
    assert_eq!(bad.algorithm, "RLS-long");
    assert!(bad.message.is_some());
    assert_eq!(run.reports().len(), 5);
}

#[test]
fn timing_fills_runtime_column() {
    let mut cfg = ExperimentConfig::from_toml_str(FIVE).unwrap();
    cfg.timing = true;
    cfg.timing_repeats = 1;
    let run = run_matrix(&cfg, 2).unwrap();
    assert!(run.reports().iter().all(|r| r.sr_ms.is_some_and(|v| v > 0.0)));
}
