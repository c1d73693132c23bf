//! Gradient variable-forgetting-factor RLS (Leung & So, 2005).
//!
//! Lambda follows the gradient of the squared a-priori error, using the
//! sensitivities `psi = d theta / d lambda` and `S = d P / d lambda` carried
//! alongside the usual recursion. No outlier gate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_init_len, FilterOutput, StreamingFilter};
use crate::error::{invalid, Result};
use crate::recursive::{CovarianceInit, PolyRls};
use crate::regression::{symmetrize, Sample, TimeScale};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GvffConfig {
    pub degree: usize,
    /// Gradient step on lambda.
    pub step_size: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_init: f64,
    pub init_window: usize,
    pub time_scale: TimeScale,
}

impl Default for GvffConfig {
    fn default() -> Self {
        Self {
            degree: 4,
            step_size: 0.01,
            lambda_min: 0.85,
            lambda_max: 0.95,
            lambda_init: 0.90,
            init_window: 100,
            time_scale: TimeScale::default(),
        }
    }
}

impl GvffConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.lambda_min, self.lambda_max);
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return invalid(format!("need 0 < lambda_min <= lambda_max <= 1, got [{lo}, {hi}]"));
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return invalid("step_size must be finite and >= 0");
        }
        if self.init_window < self.degree + 2 {
            return invalid("init_window must be at least degree + 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Gvff {
    config: GvffConfig,
    core: PolyRls,
    lambda: f64,
    psi: DVector<f64>,
    s: DMatrix<f64>,
    step_index: usize,
}

impl Gvff {
    pub fn init(window: &[Sample], config: &GvffConfig) -> Result<Self> {
        config.validate()?;
        check_init_len(window, config.init_window)?;
        let (core, _) = PolyRls::from_window(
            window,
            config.degree,
            config.time_scale,
            CovarianceInit::ResidualVariance,
        )?;
        let n = config.degree + 1;
        Ok(Self {
            config: config.clone(),
            core,
            lambda: config.lambda_init.clamp(config.lambda_min, config.lambda_max),
            psi: DVector::zeros(n),
            s: DMatrix::zeros(n, n),
            step_index: window.len(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl StreamingFilter for Gvff {
    fn step(&mut self, t_raw: f64, y: f64) -> Result<FilterOutput> {
        let (phi, shift) = self.core.advance(t_raw, y)?;
        if let Some(t) = shift {
            self.psi = &t * &self.psi;
            self.s = symmetrize(&(&t * &self.s * t.transpose()));
        }
        let x = phi.entries();
        let prediction = self.core.predict(&phi);
        let e = y - prediction;

        self.lambda = (self.lambda + self.config.step_size * self.psi.dot(x) * e)
            .clamp(self.config.lambda_min, self.config.lambda_max);
        let k = self.core.update(&phi, e, self.lambda, self.step_index)?;

        let n = x.len();
        let a = DMatrix::identity(n, n) - &k * x.transpose();
        let s = (&a * &self.s * a.transpose() + &k * k.transpose() - &self.core.p) / self.lambda;
        self.s = symmetrize(&s);
        self.psi = &a * &self.psi + &self.s * x * e;
        self.step_index += 1;

        Ok(FilterOutput {
            lambda: Some(self.lambda),
            ..FilterOutput::plain(prediction, self.core.evaluate(t_raw), e)
        })
    }
}
