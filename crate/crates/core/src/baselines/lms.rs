//! Normalised LMS on a low-degree local polynomial basis.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{check_init_len, FilterOutput, StreamingFilter};
use crate::error::{invalid, Result};
use crate::recursive::{check_window, local_fit, REBASE_SPAN};
use crate::regression::{poly_basis, shift_matrix, RegressorVector, Sample, TimeScale};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmsConfig {
    /// Level + trend by default; higher degrees are not observable from one sample per step.
    pub degree: usize,
    pub step_size: f64,
    pub epsilon: f64,
    pub init_window: usize,
    pub time_scale: TimeScale,
}

impl Default for LmsConfig {
    fn default() -> Self {
        Self {
            degree: 1,
            step_size: 0.2,
            epsilon: 1e-8,
            init_window: 100,
            time_scale: TimeScale::default(),
        }
    }
}

impl LmsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size < 2.0) {
            return invalid(format!("NLMS step size must lie in (0, 2), got {}", self.step_size));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return invalid("epsilon must be finite and >= 0");
        }
        if self.init_window < self.degree + 2 {
            return invalid("init_window must be at least degree + 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Lms {
    config: LmsConfig,
    theta: DVector<f64>,
    origin: f64,
    last_t: f64,
}

impl Lms {
    pub fn init(window: &[Sample], config: &LmsConfig) -> Result<Self> {
        config.validate()?;
        check_init_len(window, config.init_window)?;
        check_window(window)?;
        let last = window[window.len() - 1];
        let origin = config.time_scale.tau(last.t);
        let fit = local_fit(window, config.degree, config.time_scale, origin)?;
        Ok(Self { config: config.clone(), theta: fit.theta, origin, last_t: last.t })
    }

    /// Starts from explicit parameters about scaled time `origin`.
    pub fn from_theta(theta: DVector<f64>, origin: f64, config: &LmsConfig) -> Result<Self> {
        config.validate()?;
        if theta.len() != config.degree + 1 {
            return invalid("theta length must be degree + 1");
        }
        Ok(Self { config: config.clone(), theta, origin, last_t: f64::NEG_INFINITY })
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    /// `theta += mu r phi / (eps + phi^T phi)`; returns the a-priori prediction.
    pub fn update(&mut self, phi: &RegressorVector, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return invalid(format!("non-finite measurement {y}"));
        }
        if phi.entries().len() != self.theta.len() {
            return invalid("regressor length does not match parameters");
        }
        let x = phi.entries();
        let prediction = x.dot(&self.theta);
        let r = y - prediction;
        if r != 0.0 {
            let g = self.config.step_size * r / (self.config.epsilon + x.norm_squared());
            self.theta.axpy(g, x, 1.0);
        }
        Ok(prediction)
    }

    fn evaluate(&self, tau_local: f64) -> f64 {
        let mut acc = 0.0;
        for k in (0..self.theta.len()).rev() {
            acc = acc * tau_local + self.theta[k];
        }
        acc
    }
}

impl StreamingFilter for Lms {
    fn step(&mut self, t_raw: f64, y: f64) -> Result<FilterOutput> {
        if !t_raw.is_finite() || t_raw <= self.last_t {
            return invalid(format!("time must increase strictly: {t_raw} after {}", self.last_t));
        }
        self.last_t = t_raw;
        let tau = self.config.time_scale.tau(t_raw);
        if (tau - self.origin).abs() > REBASE_SPAN {
            self.theta = shift_matrix(tau - self.origin, self.config.degree) * &self.theta;
            self.origin = tau;
        }
        let local = tau - self.origin;
        let phi = poly_basis(local, self.config.degree)?;
        let prediction = self.update(&phi, y)?;
        Ok(FilterOutput::plain(prediction, self.evaluate(local), y - prediction))
    }
}
