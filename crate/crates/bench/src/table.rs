//! Median aggregation and fixed-width comparison tables.

use std::fmt::Write as _;

use rvmrls::metrics::{Metric, MetricsReport};
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// Per-metric medians of one algorithm on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: String,
    pub scenario_id: String,
    pub seeds: usize,
    pub sr_ms: Option<f64>,
    pub mse: f64,
    pub vr: f64,
    pub me: f64,
}

/// Something `render_table` can lay out.
pub trait TableRow {
    fn algorithm(&self) -> &str;
    fn scenario_id(&self) -> &str;
    fn metric(&self, m: Metric) -> Option<f64>;
}

impl TableRow for MetricsReport {
    fn algorithm(&self) -> &str {
        &self.algorithm
    }
    fn scenario_id(&self) -> &str {
        &self.scenario_id
    }
    fn metric(&self, m: Metric) -> Option<f64> {
        self.get(m)
    }
}

impl TableRow for AggregateRow {
    fn algorithm(&self) -> &str {
        &self.algorithm
    }
    fn scenario_id(&self) -> &str {
        &self.scenario_id
    }
    fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Sr => self.sr_ms,
            Metric::Mse => Some(self.mse),
            Metric::Vr => Some(self.vr),
            Metric::Me => Some(self.me),
        }
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Groups reports by (scenario, algorithm) in first-seen order and takes medians.
pub fn aggregate(reports: &[MetricsReport]) -> Vec<AggregateRow> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in reports {
        let k = (r.scenario_id.as_str(), r.algorithm.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(scenario, algorithm)| {
            let group: Vec<&MetricsReport> = reports
                .iter()
                .filter(|r| r.scenario_id == scenario && r.algorithm == algorithm)
                .collect();
            let col = |f: fn(&MetricsReport) -> f64| -> f64 {
                median(&group.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("non-empty group")
            };
            let sr: Vec<f64> = group.iter().filter_map(|r| r.sr_ms).collect();
            AggregateRow {
                algorithm: algorithm.to_string(),
                scenario_id: scenario.to_string(),
                seeds: group.len(),
                sr_ms: if sr.len() == group.len() { median(&sr) } else { None },
                mse: col(|r| r.mse),
                vr: col(|r| r.vr),
                me: col(|r| r.me),
            }
        })
        .collect()
}

/// Text table with algorithms as rows and SR/MSE/VR/ME as columns.
/// The lowest value in each column is marked with `*`; ties are all marked.
pub fn render_table<R: TableRow>(rows: &[R]) -> Result<String, BenchError> {
    let first = rows
        .first()
        .ok_or_else(|| BenchError::InvalidInput("no reports to tabulate".into()))?;
    let scenario = first.scenario_id();
    if rows.iter().any(|r| r.scenario_id() != scenario) {
        return Err(BenchError::InvalidInput("reports span more than one scenario".into()));
    }
    let flags = best_flags(rows);
    let width = rows.iter().map(|r| r.algorithm().len()).max().unwrap_or(0).max(9);

    let mut out = String::new();
    writeln!(out, "scenario: {scenario}").unwrap();
    write!(out, "{:<width$}", "Algorithm").unwrap();
    for m in Metric::ALL {
        let head = if m == Metric::Sr { "SR (ms)" } else { m.label() };
        write!(out, " {head:>12}").unwrap();
    }
    out.push('\n');
    for (r, flag) in rows.iter().zip(&flags) {
        write!(out, "{:<width$}", r.algorithm()).unwrap();
        for (i, &m) in Metric::ALL.iter().enumerate() {
            let cell = match r.metric(m) {
                Some(v) => {
                    let mark = if flag[i] { "*" } else { " " };
                    if m == Metric::Sr {
                        format!("{v:.5}{mark}")
                    } else {
                        format!("{v:.3}{mark}")
                    }
                }
                None => "- ".to_string(),
            };
            write!(out, " {cell:>12}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Flag markers per row and metric, in `Metric::ALL` order.
pub fn best_flags<R: TableRow>(rows: &[R]) -> Vec<[bool; 4]> {
    let best: Vec<Option<f64>> = Metric::ALL
        .iter()
        .map(|&m| rows.iter().filter_map(|r| r.metric(m)).min_by(f64::total_cmp))
        .collect();
    rows.iter()
        .map(|r| {
            let mut f = [false; 4];
            for (i, &m) in Metric::ALL.iter().enumerate() {
                f[i] = r.metric(m).is_some() && r.metric(m) == best[i];
            }
            f
        })
        .collect()
}
