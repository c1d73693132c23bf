//! Polynomial regressors, time scaling and windowed batch least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One raw observation: time stamp and measured value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub y: f64,
}

impl Sample {
    pub fn new(t: f64, y: f64) -> Self {
        Self { t, y }
    }
}

impl From<(f64, f64)> for Sample {
    fn from((t, y): (f64, f64)) -> Self {
        Self { t, y }
    }
}

/// Maps raw time onto the scaled axis `tau = t / scale_divisor` fed to the basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TimeScale {
    scale_divisor: f64,
}

impl TimeScale {
    pub const DEFAULT_DIVISOR: f64 = 100.0;

    pub fn new(scale_divisor: f64) -> Result<Self> {
        if !(scale_divisor.is_finite() && scale_divisor > 0.0) {
            return invalid(format!("scale_divisor must be finite and > 0, got {scale_divisor}"));
        }
        Ok(Self { scale_divisor })
    }

    pub fn scale_divisor(&self) -> f64 {
        self.scale_divisor
    }

    pub fn tau(&self, t_raw: f64) -> f64 {
        t_raw / self.scale_divisor
    }
}

impl Default for TimeScale {
    fn default() -> Self {
        Self { scale_divisor: Self::DEFAULT_DIVISOR }
    }
}

impl TryFrom<f64> for TimeScale {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TimeScale> for f64 {
    fn from(s: TimeScale) -> f64 {
        s.scale_divisor
    }
}

/// `[1, tau, tau^2, ..., tau^m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorVector {
    entries: DVector<f64>,
}

impl RegressorVector {
    pub fn entries(&self) -> &DVector<f64> {
        &self.entries
    }

    pub fn degree(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        self.entries.as_slice()
    }
}

/// Builds the degree-`m` monomial regressor at `tau`.
pub fn poly_basis(tau: f64, m: usize) -> Result<RegressorVector> {
    if !tau.is_finite() {
        return invalid(format!("tau must be finite, got {tau}"));
    }
    let mut entries = DVector::zeros(m + 1);
    let mut acc = 1.0;
    for k in 0..=m {
        entries[k] = acc;
        acc *= tau;
    }
    Ok(RegressorVector { entries })
}

/// Inner product of a regressor with a parameter vector.
pub fn predict(phi: &RegressorVector, theta: &DVector<f64>) -> Result<f64> {
    if phi.entries.len() != theta.len() {
        return invalid(format!(
            "regressor length {} does not match parameter length {}",
            phi.entries.len(),
            theta.len()
        ));
    }
    Ok(phi.entries.dot(theta))
}

/// Result of a batch polynomial fit.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchFit {
    pub theta: DVector<f64>,
    /// SSE / (n - m - 1).
    pub residual_variance: f64,
    /// `residual_variance * (Phi^T Phi)^-1`, symmetrised.
    pub covariance: DMatrix<f64>,
    /// `(Phi^T Phi)^-1`, symmetrised.
    pub gram_inverse: DMatrix<f64>,
}

/// Least-squares polynomial fit of degree `m` over `(tau, y)` pairs.
///
/// Solved through an SVD of the design matrix; the Gram inverse is rebuilt
/// from the same factorisation.
pub fn batch_least_squares(samples: &[(f64, f64)], m: usize) -> Result<BatchFit> {
    let n = samples.len();
    if n < m + 2 {
        return Err(Error::InsufficientData { needed: m + 2, got: n });
    }
    if samples.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
        return invalid("batch samples must be finite");
    }
    let cols = m + 1;
    let mut phi = DMatrix::zeros(n, cols);
    let mut y = DVector::zeros(n);
    for (i, &(tau, yi)) in samples.iter().enumerate() {
        let mut acc = 1.0;
        for k in 0..cols {
            phi[(i, k)] = acc;
            acc *= tau;
        }
        y[i] = yi;
    }

    let svd = phi.clone().svd(true, true);
    let s = &svd.singular_values;
    let largest = s.max();
    let smallest = s.min();
    if !(smallest >= 1e-10 * largest) || largest == 0.0 {
        return Err(Error::SingularFit { smallest, largest });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v = svd.v_t.as_ref().expect("v_t requested").transpose();

    let uty = u.transpose() * &y;
    let mut coeff = DVector::zeros(cols);
    for k in 0..cols {
        coeff[k] = uty[k] / s[k];
    }
    let theta = &v * coeff;

    let mut scaled_v = v.clone();
    for k in 0..cols {
        let inv = 1.0 / (s[k] * s[k]);
        scaled_v.column_mut(k).scale_mut(inv);
    }
    let gram_inverse = symmetrize(&(&scaled_v * v.transpose()));

    let resid = &y - &phi * &theta;
    let dof = (n - m - 1) as f64;
    let residual_variance = resid.norm_squared() / dof;
    let covariance = &gram_inverse * residual_variance;

    Ok(BatchFit { theta, residual_variance, covariance, gram_inverse })
}

/// `(A + A^T) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Re-expresses polynomial coefficients around a shifted origin.
///
/// If `p(tau) = sum theta_k (tau - o)^k` then `shift_matrix(d, m) * theta`
/// holds the coefficients of the same polynomial in powers of `tau - (o + d)`.
pub fn shift_matrix(d: f64, m: usize) -> DMatrix<f64> {
    let n = m + 1;
    let mut t = DMatrix::zeros(n, n);
    for k in 0..n {
        // row j, column k: C(k, j) d^(k - j)
        let mut binom = 1.0;
        let mut pow = 1.0;
        for j in (0..=k).rev() {
            t[(j, k)] = binom * pow;
            // step from j to j-1: C(k, j-1) = C(k, j) * j / (k - j + 1)
            binom = binom * j as f64 / (k - j + 1) as f64;
            pow *= d;
        }
    }
    t
}
