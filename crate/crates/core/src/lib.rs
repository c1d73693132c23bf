//! Residual-variance-matching recursive least squares (RVM-RLS) for noisy,
//! outlier-prone waypoint streams, together with the comparison filters,
//! the terrain-following scenario generator and the evaluation metrics.
//!
//! Every filter consumes `(t, y)` samples, is initialised from a batch fit
//! over a leading window and then produces one output per later sample.

pub mod baselines;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod regression;
pub mod rvm;
pub mod terrain;

mod recursive;

pub use baselines::{FilterOutput, FilterSpec, StreamingFilter};
pub use error::{Error, Result};
pub use regression::{BatchFit, RegressorVector, Sample, TimeScale};
pub use recursive::CovarianceInit;
pub use rvm::{RvmRls, RvmRlsConfig, StepOutput};
