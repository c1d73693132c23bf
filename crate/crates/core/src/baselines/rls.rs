//! RLS with a fixed forgetting factor, optionally behind the 3-sigma gate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_init_len, FilterOutput, StreamingFilter};
use crate::error::{invalid, Result};
use crate::recursive::{CovarianceInit, Gate, PolyRls};
use crate::regression::{RegressorVector, Sample, TimeScale};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticRlsConfig {
    pub degree: usize,
    pub lambda: f64,
    pub init_window: usize,
    pub time_scale: TimeScale,
    pub gate: bool,
    pub target_noise_variance_override: Option<f64>,
    /// Zero disables the refit after a run of rejections.
    pub max_consecutive_rejections: usize,
    pub covariance_init: CovarianceInit,
}

impl Default for StaticRlsConfig {
    fn default() -> Self {
        Self {
            degree: 4,
            lambda: 0.98,
            init_window: 100,
            time_scale: TimeScale::default(),
            gate: true,
            target_noise_variance_override: None,
            max_consecutive_rejections: 6,
            covariance_init: CovarianceInit::ResidualVariance,
        }
    }
}

impl StaticRlsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return invalid(format!("lambda must lie in (0, 1], got {}", self.lambda));
        }
        if self.init_window < self.degree + 2 {
            return invalid(format!(
                "init_window {} must be at least degree + 2",
                self.init_window
            ));
        }
        if let Some(v) = self.target_noise_variance_override {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("target variance override must be >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StaticRls {
    config: StaticRlsConfig,
    core: PolyRls,
    gate: Gate,
    step_index: usize,
}

impl StaticRls {
    pub fn init(window: &[Sample], config: &StaticRlsConfig) -> Result<Self> {
        config.validate()?;
        check_init_len(window, config.init_window)?;
        let (core, fit) =
            PolyRls::from_window(window, config.degree, config.time_scale, config.covariance_init)?;
        let target = config.target_noise_variance_override.unwrap_or(fit.residual_variance);
        let gate = Gate::new(config.gate, target, config.max_consecutive_rejections, window);
        Ok(Self { config: config.clone(), core, gate, step_index: window.len() })
    }

    /// One update on an already built regressor; returns the a-priori prediction.
    pub fn update(&mut self, phi: &RegressorVector, y: f64) -> Result<(f64, bool)> {
        let prediction = self.core.predict(phi);
        let residual = y - prediction;
        let rejected = self.gate.rejects(residual);
        let r = if rejected { 0.0 } else { residual };
        self.core.update(phi, r, self.config.lambda, self.step_index)?;
        Ok((prediction, rejected))
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.core.theta
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.core.p
    }

    pub fn theta_about(&self, origin: f64) -> DVector<f64> {
        self.core.theta_about(origin)
    }
}

impl StreamingFilter for StaticRls {
    fn step(&mut self, t_raw: f64, y: f64) -> Result<FilterOutput> {
        let (phi, _) = self.core.advance(t_raw, y)?;
        let (prediction, rejected) = self.update(&phi, y)?;
        let reinitialized = self.gate.record(Sample::new(t_raw, y), rejected);
        if reinitialized {
            self.gate.refit(&mut self.core, self.config.time_scale, self.step_index)?;
        }
        self.step_index += 1;
        Ok(FilterOutput {
            rejected,
            reinitialized,
            lambda: Some(self.config.lambda),
            ..FilterOutput::plain(prediction, self.core.evaluate(t_raw), y - prediction)
        })
    }
}
