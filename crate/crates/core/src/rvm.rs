//! RVM-RLS: recursive least squares whose forgetting factor is driven so that
//! the running residual variance tracks a target noise variance.
//!
//! Each step predicts, gates the residual with a 3-sigma rule, updates the
//! running variance and the variance-mismatch cost, takes one clipped gradient
//! step on lambda and finally runs the RLS update with the new lambda.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::recursive::{CovarianceInit, Gate, PolyRls};
use crate::regression::{Sample, TimeScale};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RvmRlsConfig {
    pub degree: usize,
    /// eta
    pub step_size: f64,
    /// c
    pub cost_gain: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_init: f64,
    /// Replaces the batch residual variance as the target when set.
    pub target_noise_variance_override: Option<f64>,
    pub init_window: usize,
    pub time_scale: TimeScale,
    /// 3-sigma outlier gate; off turns every residual into an accepted one.
    pub gate: bool,
    /// After this many rejections in a row the parameters are refitted from
    /// the trailing `init_window` samples. Zero disables the refit.
    pub max_consecutive_rejections: usize,
    pub covariance_init: CovarianceInit,
}

impl Default for RvmRlsConfig {
    fn default() -> Self {
        Self {
            degree: 4,
            step_size: 0.001,
            cost_gain: 20.0,
            lambda_min: 0.85,
            lambda_max: 0.95,
            lambda_init: 0.90,
            target_noise_variance_override: None,
            init_window: 100,
            time_scale: TimeScale::default(),
            gate: true,
            max_consecutive_rejections: 6,
            covariance_init: CovarianceInit::ResidualVariance,
        }
    }
}

impl RvmRlsConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.lambda_min, self.lambda_max);
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return invalid(format!("need 0 < lambda_min <= lambda_max <= 1, got [{lo}, {hi}]"));
        }
        if !self.lambda_init.is_finite() {
            return invalid("lambda_init must be finite");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return invalid(format!("step_size must be > 0, got {}", self.step_size));
        }
        if !(self.cost_gain > 0.0 && self.cost_gain.is_finite()) {
            return invalid(format!("cost_gain must be > 0, got {}", self.cost_gain));
        }
        if self.init_window < self.degree + 2 {
            return invalid(format!(
                "init_window {} must be at least degree + 2 = {}",
                self.init_window,
                self.degree + 2
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

/// Variance recursion, mismatch cost and its derivative with respect to lambda.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceCost {
    pub sigma2_next: f64,
    pub cost: f64,
    pub gradient: f64,
}

/// `s' = lambda s + (1 - lambda) r^2`, `J = c (s' - target)^2`,
/// `dJ/dlambda = 2c (s' - target)(s - r^2)`.
pub fn variance_cost(
    sigma2_prev: f64,
    residual: f64,
    lambda: f64,
    c: f64,
    sigma2_target: f64,
) -> Result<VarianceCost> {
    let all = [sigma2_prev, residual, lambda, c, sigma2_target];
    if all.iter().any(|v| !v.is_finite()) {
        return invalid(format!("variance_cost inputs must be finite: {all:?}"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return invalid(format!("lambda must lie in [0, 1], got {lambda}"));
    }
    let r2 = residual * residual;
    let sigma2_next = lambda * sigma2_prev + (1.0 - lambda) * r2;
    let mismatch = sigma2_next - sigma2_target;
    Ok(VarianceCost {
        sigma2_next,
        cost: c * mismatch * mismatch,
        gradient: 2.0 * c * mismatch * (sigma2_prev - r2),
    })
}

/// Everything one step produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// A-priori prediction from the previous parameters.
    pub prediction: f64,
    /// Fitted value at the current sample after the update.
    pub estimate: f64,
    /// Raw residual `y - prediction`, reported before any zeroing.
    pub residual: f64,
    pub rejected: bool,
    /// The parameters were refitted after a run of rejections.
    pub reinitialized: bool,
    pub lambda_after: f64,
    pub sigma2_hat_after: f64,
    pub cost: f64,
    pub gradient: f64,
}

#[derive(Debug, Clone)]
pub struct RvmRls {
    config: RvmRlsConfig,
    core: PolyRls,
    gate: Gate,
    lambda: f64,
    sigma2_hat: f64,
    sigma2_target: f64,
    step_index: usize,
}

impl RvmRls {
    /// Batch-fits the first `init_window` samples.
    pub fn init(window: &[Sample], config: &RvmRlsConfig) -> Result<Self> {
        config.validate()?;
        if window.len() != config.init_window {
            return invalid(format!(
                "init expects {} samples, got {}",
                config.init_window,
                window.len()
            ));
        }
        let (core, fit) =
            PolyRls::from_window(window, config.degree, config.time_scale, config.covariance_init)?;
        let sigma2_target = config
            .target_noise_variance_override
            .unwrap_or(fit.residual_variance);
        let gate = Gate::new(config.gate, sigma2_target, config.max_consecutive_rejections, window);
        Ok(Self {
            config: config.clone(),
            core,
            gate,
            lambda: config.lambda_init.clamp(config.lambda_min, config.lambda_max),
            sigma2_hat: fit.residual_variance,
            sigma2_target,
            step_index: window.len(),
        })
    }

    pub fn step(&mut self, t_raw: f64, y: f64) -> Result<StepOutput> {
        let (phi, _) = self.core.advance(t_raw, y)?;
        let prediction = self.core.predict(&phi);
        let residual = y - prediction;
        let rejected = self.gate.rejects(residual);
        let r = if rejected { 0.0 } else { residual };

        let vc = variance_cost(
            self.sigma2_hat,
            r,
            self.lambda,
            self.config.cost_gain,
            self.sigma2_target,
        )
        .map_err(|e| self.diverged(e))?;
        self.sigma2_hat = vc.sigma2_next;
        self.lambda = (self.lambda - self.config.step_size * vc.gradient)
            .clamp(self.config.lambda_min, self.config.lambda_max);

        self.core.update(&phi, r, self.lambda, self.step_index)?;

        let reinitialized = self.gate.record(Sample::new(t_raw, y), rejected);
        if reinitialized {
            self.gate.refit(&mut self.core, self.config.time_scale, self.step_index)?;
        }
        self.step_index += 1;

        Ok(StepOutput {
            prediction,
            estimate: self.core.evaluate(t_raw),
            residual,
            rejected,
            reinitialized,
            lambda_after: self.lambda,
            sigma2_hat_after: self.sigma2_hat,
            cost: vc.cost,
            gradient: vc.gradient,
        })
    }

    fn diverged(&self, e: Error) -> Error {
        Error::NumericalDivergence { step_index: self.step_index, detail: e.to_string() }
    }

    /// Initialises on the leading window and steps through the rest.
    pub fn run(samples: &[Sample], config: &RvmRlsConfig) -> Result<Vec<StepOutput>> {
        if samples.len() < config.init_window {
            return Err(Error::InsufficientData { needed: config.init_window, got: samples.len() });
        }
        let (window, rest) = samples.split_at(config.init_window);
        let mut f = Self::init(window, config)?;
        rest.iter().map(|s| f.step(s.t, s.y)).collect()
    }

    pub fn config(&self) -> &RvmRlsConfig {
        &self.config
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma2_hat(&self) -> f64 {
        self.sigma2_hat
    }

    pub fn sigma2_target(&self) -> f64 {
        self.sigma2_target
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    /// Parameters in the filter's current local coordinate.
    pub fn theta(&self) -> &DVector<f64> {
        &self.core.theta
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.core.p
    }

    /// Scaled time the local coordinate is centred on.
    pub fn origin(&self) -> f64 {
        self.core.origin()
    }

    /// Parameters of the current fit expanded about scaled time `origin`.
    pub fn theta_about(&self, origin: f64) -> DVector<f64> {
        self.core.theta_about(origin)
    }

    /// Fitted value at raw time `t_raw` under the current parameters.
    pub fn evaluate(&self, t_raw: f64) -> f64 {
        self.core.evaluate(t_raw)
    }
}
