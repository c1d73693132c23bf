//! Comparison filters behind one streaming interface.
//!
//! All of them start from the same leading window of samples and emit one
//! [`FilterOutput`] per later sample.

mod gvff;
mod lms;
mod pf;
mod rls;

pub use gvff::{Gvff, GvffConfig};
pub use lms::{Lms, LmsConfig};
pub use pf::{Pf, PfConfig};
pub use rls::{StaticRls, StaticRlsConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::Sample;
use crate::rvm::{RvmRls, RvmRlsConfig, StepOutput};

/// Per-step output common to every filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOutput {
    /// A-priori prediction of the sample.
    pub prediction: f64,
    /// Filtered estimate at the sample time; this is what gets scored.
    pub estimate: f64,
    pub residual: f64,
    pub rejected: bool,
    pub reinitialized: bool,
    /// Forgetting factor after the step, for filters that have one.
    pub lambda: Option<f64>,
    /// Running residual variance, RVM-RLS only.
    pub sigma2_hat: Option<f64>,
    pub cost: Option<f64>,
    /// Particle weights collapsed and were reset.
    pub degenerate: bool,
}

impl FilterOutput {
    pub(crate) fn plain(prediction: f64, estimate: f64, residual: f64) -> Self {
        Self {
            prediction,
            estimate,
            residual,
            rejected: false,
            reinitialized: false,
            lambda: None,
            sigma2_hat: None,
            cost: None,
            degenerate: false,
        }
    }
}

impl From<StepOutput> for FilterOutput {
    fn from(s: StepOutput) -> Self {
        Self {
            prediction: s.prediction,
            estimate: s.estimate,
            residual: s.residual,
            rejected: s.rejected,
            reinitialized: s.reinitialized,
            lambda: Some(s.lambda_after),
            sigma2_hat: Some(s.sigma2_hat_after),
            cost: Some(s.cost),
            degenerate: false,
        }
    }
}

pub trait StreamingFilter: Send {
    fn step(&mut self, t_raw: f64, y: f64) -> Result<FilterOutput>;
}

impl StreamingFilter for RvmRls {
    fn step(&mut self, t_raw: f64, y: f64) -> Result<FilterOutput> {
        RvmRls::step(self, t_raw, y).map(Into::into)
    }
}

/// Serialisable choice of filter and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FilterSpec {
    Lms(LmsConfig),
    Rls(StaticRlsConfig),
    RvmRls(RvmRlsConfig),
    GvffRls(GvffConfig),
    Pf(PfConfig),
}

impl FilterSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Lms(_) => "lms",
            Self::Rls(_) => "rls",
            Self::RvmRls(_) => "rvm-rls",
            Self::GvffRls(_) => "gvff-rls",
            Self::Pf(_) => "pf",
        }
    }

    pub fn init_window(&self) -> usize {
        match self {
            Self::Lms(c) => c.init_window,
            Self::Rls(c) => c.init_window,
            Self::RvmRls(c) => c.init_window,
            Self::GvffRls(c) => c.init_window,
            Self::Pf(c) => c.init_window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Lms(c) => c.validate(),
            Self::Rls(c) => c.validate(),
            Self::RvmRls(c) => c.validate(),
            Self::GvffRls(c) => c.validate(),
            Self::Pf(c) => c.validate(),
        }
    }

    /// Copy with the random seed replaced (only the particle filter has one).
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            Self::Pf(c) => Self::Pf(PfConfig { seed, ..c.clone() }),
            other => other.clone(),
        }
    }

    pub fn build(&self, window: &[Sample]) -> Result<Box<dyn StreamingFilter>> {
        Ok(match self {
            Self::Lms(c) => Box::new(Lms::init(window, c)?),
            Self::Rls(c) => Box::new(StaticRls::init(window, c)?),
            Self::RvmRls(c) => Box::new(RvmRls::init(window, c)?),
            Self::GvffRls(c) => Box::new(Gvff::init(window, c)?),
            Self::Pf(c) => Box::new(Pf::init(window, c)?),
        })
    }

    /// Builds on the leading window and steps through the remaining samples.
    pub fn run(&self, samples: &[Sample]) -> Result<Vec<FilterOutput>> {
        let n0 = self.init_window();
        if samples.len() < n0 {
            return Err(Error::InsufficientData { needed: n0, got: samples.len() });
        }
        let (window, rest) = samples.split_at(n0);
        let mut f = self.build(window)?;
        rest.iter().map(|s| f.step(s.t, s.y)).collect()
    }
}

pub(crate) fn check_init_len(window: &[Sample], expected: usize) -> Result<()> {
    if window.len() != expected {
        return Err(Error::InvalidInput(format!(
            "init expects {expected} samples, got {}",
            window.len()
        )));
    }
    Ok(())
}
