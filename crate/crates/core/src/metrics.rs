//! Accuracy and runtime metrics for filter outputs.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::StreamingFilter;
use crate::error::{invalid, Error, Result};
use crate::regression::Sample;

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub algorithm: String,
    pub scenario_id: String,
    pub seed: u64,
    /// Median over timed runs of the mean step time, ms. `None` when timing was skipped.
    pub sr_ms: Option<f64>,
    pub mse: f64,
    pub vr: f64,
    pub me: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sr,
    Mse,
    Vr,
    Me,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Sr, Metric::Mse, Metric::Vr, Metric::Me];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Sr => "SR",
            Metric::Mse => "MSE",
            Metric::Vr => "VR",
            Metric::Me => "ME",
        }
    }
}

impl MetricsReport {
    /// Scores `estimates` against `reference` with measurement noise variance `sigma2`.
    pub fn score(
        algorithm: &str,
        scenario_id: &str,
        seed: u64,
        estimates: &[f64],
        reference: &[f64],
        sigma2: f64,
    ) -> Result<Self> {
        Ok(Self {
            algorithm: algorithm.to_string(),
            scenario_id: scenario_id.to_string(),
            seed,
            sr_ms: None,
            mse: mse(estimates, reference)?,
            vr: variance_ratio(estimates, reference, sigma2)?,
            me: max_error(estimates, reference)?,
        })
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Sr => self.sr_ms,
            Metric::Mse => Some(self.mse),
            Metric::Vr => Some(self.vr),
            Metric::Me => Some(self.me),
        }
    }
}

fn check_pair(pred: &[f64], reference: &[f64]) -> Result<()> {
    if pred.len() != reference.len() {
        return invalid(format!(
            "prediction length {} does not match reference length {}",
            pred.len(),
            reference.len()
        ));
    }
    if pred.is_empty() {
        return invalid("empty prediction sequence");
    }
    Ok(())
}

fn errors<'a>(pred: &'a [f64], reference: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
    pred.iter().zip(reference).map(|(p, r)| p - r)
}

pub fn mse(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(pred, reference)?;
    Ok(errors(pred, reference).map(|e| e * e).sum::<f64>() / pred.len() as f64)
}

/// Population variance of the error divided by `sigma2`.
pub fn variance_ratio(pred: &[f64], reference: &[f64], sigma2: f64) -> Result<f64> {
    check_pair(pred, reference)?;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return invalid(format!("sigma2 must be finite and > 0, got {sigma2}"));
    }
    let n = pred.len() as f64;
    let mean = errors(pred, reference).sum::<f64>() / n;
    let var = errors(pred, reference).map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    Ok(var / sigma2)
}

pub fn max_error(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(pred, reference)?;
    Ok(errors(pred, reference).fold(0.0, |m, e| m.max(e.abs())))
}

/// `100 (baseline - candidate) / baseline`.
pub fn improvement_pct(baseline: f64, candidate: f64) -> Result<f64> {
    if baseline == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(100.0 * (baseline - candidate) / baseline)
}

/// Relative improvement of `candidate` over `baseline` on one metric.
pub fn improvement(baseline: &MetricsReport, candidate: &MetricsReport, metric: Metric) -> Result<f64> {
    if baseline.scenario_id != candidate.scenario_id || baseline.seed != candidate.seed {
        return invalid("improvement needs reports from the same scenario and seed");
    }
    match (baseline.get(metric), candidate.get(metric)) {
        (Some(b), Some(c)) => improvement_pct(b, c),
        _ => invalid(format!("{} missing from a report", metric.label())),
    }
}

/// Mean wall time per step in milliseconds.
///
/// `make` builds a fresh filter (not timed); the samples are then stepped
/// through once as warm-up and `repeats` more times under the clock. The
/// median of the timed runs is returned.
pub fn time_step<F>(mut make: F, samples: &[Sample], repeats: usize) -> Result<f64>
where
    F: FnMut() -> Result<Box<dyn StreamingFilter>>,
{
    if samples.is_empty() {
        return invalid("no samples to time");
    }
    let mut runs = Vec::with_capacity(repeats.max(1));
    for pass in 0..=repeats.max(1) {
        let mut f = make()?;
        let start = Instant::now();
        for s in samples {
            black_box(f.step(black_box(s.t), black_box(s.y))?);
        }
        let ms = start.elapsed().as_secs_f64() * 1e3 / samples.len() as f64;
        if pass > 0 {
            runs.push(ms);
        }
    }
    runs.sort_by(f64::total_cmp);
    Ok(runs[runs.len() / 2])
}
