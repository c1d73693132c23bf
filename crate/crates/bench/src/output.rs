//! Result files. Only this module touches the output directory.
//!
//! Layout under the output directory:
//!
//! ```text
//! reports.csv                  one row per successful cell
//! aggregate.csv                per (scenario, algorithm) medians
//! table_<scenario>.txt         rendered comparison table
//! manifest.json                config hash, tool version, timestamps, cell status
//! diagnostics_<scenario>.csv   variable-memory filter diagnostics, first seed
//! estimates_<scenario>.csv     estimates of every algorithm, first seed
//! errors_<scenario>.csv        estimation errors of every algorithm, first seed
//! traces/<scenario>/seed<k>.csv              synthesized scenario
//! traces/<scenario>/seed<k>_<algorithm>.csv  per-step filter output
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rvmrls::metrics::MetricsReport;
use rvmrls::terrain::ScenarioTrace;
use rvmrls::{FilterOutput, FilterSpec};

use crate::experiment::{ExperimentRun, RunManifest};
use crate::table::{aggregate, render_table, AggregateRow};
use crate::BenchError;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b { "1" } else { "0" }
}

fn create(path: &Path) -> Result<BufWriter<File>, BenchError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_reports(reports: &[MetricsReport], path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    if reports.is_empty() {
        w.write_record(["algorithm", "scenario_id", "seed", "sr_ms", "mse", "vr", "me"])?;
    }
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_reports(path: &Path) -> Result<Vec<MetricsReport>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<MetricsReport>, _>>()?;
    Ok(rows)
}

pub fn write_aggregate(rows: &[AggregateRow], path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    if rows.is_empty() {
        w.write_record(["algorithm", "scenario_id", "seeds", "sr_ms", "mse", "vr", "me"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One rendered table per scenario, in first-seen order.
pub fn tables_by_scenario(rows: &[AggregateRow]) -> Result<Vec<(String, String)>, BenchError> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.scenario_id.as_str()) {
            names.push(&r.scenario_id);
        }
    }
    names
        .into_iter()
        .map(|n| {
            let group: Vec<AggregateRow> =
                rows.iter().filter(|r| r.scenario_id == n).cloned().collect();
            Ok((n.to_string(), render_table(&group)?))
        })
        .collect()
}

pub fn write_manifest(manifest: &RunManifest, dir: &Path) -> Result<(), BenchError> {
    let mut w = create(&dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut w, manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_step_trace(
    trace: &ScenarioTrace,
    n0: usize,
    outputs: &[FilterOutput],
    path: &Path,
) -> Result<(), BenchError> {
    let mut w = create(path)?;
    writeln!(w, "t,z,p,prediction,estimate,residual,rejected,reinitialized,lambda,sigma2_hat,degenerate")?;
    for (k, o) in outputs.iter().enumerate() {
        let i = n0 + k;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            num(trace.times[i]),
            num(trace.measurement[i]),
            num(trace.reference[i]),
            num(o.prediction),
            num(o.estimate),
            num(o.residual),
            flag(o.rejected),
            flag(o.reinitialized),
            opt(o.lambda),
            opt(o.sigma2_hat),
            flag(o.degenerate),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Diagnostics of a variable-memory filter: estimate, error, variance
/// tracking and forgetting factor against the synthesized scenario.
pub fn write_diagnostics(
    trace: &ScenarioTrace,
    n0: usize,
    outputs: &[FilterOutput],
    noise_variance: f64,
    path: &Path,
) -> Result<(), BenchError> {
    let mut w = create(path)?;
    writeln!(w, "t,H,p,z,estimate,noise,outlier,error,variance_deviation,lambda")?;
    for (k, o) in outputs.iter().enumerate() {
        let i = n0 + k;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            num(trace.times[i]),
            num(trace.terrain[i]),
            num(trace.reference[i]),
            num(trace.measurement[i]),
            num(o.estimate),
            num(trace.noise[i]),
            flag(trace.outlier_mask[i]),
            num(o.estimate - trace.reference[i]),
            opt(o.sigma2_hat.map(|s| s - noise_variance)),
            opt(o.lambda),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Per-algorithm columns aligned on the sample index. Cells before an
/// algorithm's initialisation window are left empty.
fn write_columns(
    trace: &ScenarioTrace,
    columns: &[(&str, usize, &[FilterOutput])],
    errors: bool,
    path: &Path,
) -> Result<(), BenchError> {
    let mut w = create(path)?;
    let mut head = if errors { "t".to_string() } else { "t,z,p".to_string() };
    for (name, _, _) in columns {
        head.push(',');
        head.push_str(name);
    }
    writeln!(w, "{head}")?;
    let start = columns.iter().map(|c| c.1).min().unwrap_or(0);
    for i in start..trace.len() {
        let mut line = num(trace.times[i]);
        if !errors {
            line.push_str(&format!(",{},{}", num(trace.measurement[i]), num(trace.reference[i])));
        }
        for (_, n0, out) in columns {
            line.push(',');
            if i >= *n0 {
                if let Some(o) = out.get(i - n0) {
                    let v = if errors { o.estimate - trace.reference[i] } else { o.estimate };
                    line.push_str(&num(v));
                }
            }
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every result file except the manifest.
pub fn write_all(run: &ExperimentRun, dir: &Path) -> Result<(), BenchError> {
    let cfg = &run.config;
    fs::create_dir_all(dir)?;
    let reports = run.reports();
    write_reports(&reports, &dir.join("reports.csv"))?;
    let rows = aggregate(&reports);
    write_aggregate(&rows, &dir.join("aggregate.csv"))?;
    for (name, text) in tables_by_scenario(&rows)? {
        fs::write(dir.join(format!("table_{name}.txt")), text)?;
    }

    if cfg.emit_traces {
        for (&(s, seed), trace) in &run.traces {
            let path = dir.join("traces").join(&cfg.scenarios[s].name).join(format!("seed{seed}.csv"));
            let mut w = create(&path)?;
            trace.write_csv(&mut w)?;
            w.flush()?;
        }
        for cell in &run.cells {
            let (Ok(r), Some(trace)) = (&cell.result, run.traces.get(&(cell.scenario, cell.seed)))
            else {
                continue;
            };
            let alg = &cfg.algorithms[cell.algorithm];
            let path = dir
                .join("traces")
                .join(&cfg.scenarios[cell.scenario].name)
                .join(format!("seed{}_{}.csv", cell.seed, alg.name));
            write_step_trace(trace, alg.spec.init_window(), &r.outputs, &path)?;
        }
    }

    let first_seed = cfg.seeds[0];
    for (s, sc) in cfg.scenarios.iter().enumerate() {
        let Some(trace) = run.traces.get(&(s, first_seed)) else { continue };
        let cells: Vec<_> = run
            .cells
            .iter()
            .filter(|c| c.scenario == s && c.seed == first_seed)
            .filter_map(|c| c.result.as_ref().ok().map(|r| (c.algorithm, r)))
            .collect();
        if let Some((a, r)) =
            cells.iter().find(|(a, _)| matches!(cfg.algorithms[*a].spec, FilterSpec::RvmRls(_)))
        {
            write_diagnostics(
                trace,
                cfg.algorithms[*a].spec.init_window(),
                &r.outputs,
                sc.scenario.noise_variance,
                &dir.join(format!("diagnostics_{}.csv", sc.name)),
            )?;
        }
        let columns: Vec<(&str, usize, &[FilterOutput])> = cells
            .iter()
            .map(|(a, r)| {
                let alg = &cfg.algorithms[*a];
                (alg.name.as_str(), alg.spec.init_window(), r.outputs.as_slice())
            })
            .collect();
        if !columns.is_empty() {
            write_columns(trace, &columns, false, &dir.join(format!("estimates_{}.csv", sc.name)))?;
            write_columns(trace, &columns, true, &dir.join(format!("errors_{}.csv", sc.name)))?;
        }
    }
    Ok(())
}
