//! Exponentially weighted RLS over a polynomial basis with a moving origin.
//!
//! The basis is evaluated at `tau - origin`. When the newest sample drifts
//! more than `REBASE_SPAN` scaled units away, theta and P are carried over to
//! a new origin with `shift_matrix`. The map is exact, so the recursion is the
//! same one as with a fixed origin; it only keeps the monomials small.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::regression::{
    batch_least_squares, poly_basis, shift_matrix, symmetrize, BatchFit, RegressorVector, Sample,
    TimeScale,
};

pub(crate) const REBASE_SPAN: f64 = 0.25;

/// How P is seeded from the initial batch fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceInit {
    /// `P = sigma2_hat * (Phi^T Phi)^-1`.
    #[default]
    ResidualVariance,
    /// `P = (Phi^T Phi)^-1`; the recursion then continues the batch solution exactly.
    Unit,
}

pub(crate) fn check_window(window: &[Sample]) -> Result<()> {
    for s in window {
        if !s.t.is_finite() || !s.y.is_finite() {
            return invalid("window samples must be finite");
        }
    }
    for pair in window.windows(2) {
        if pair[1].t <= pair[0].t {
            return invalid(format!(
                "sample times must be strictly increasing ({} then {})",
                pair[0].t, pair[1].t
            ));
        }
    }
    Ok(())
}

/// Batch fit of `window` in the local coordinate `tau - origin`.
pub(crate) fn local_fit(
    window: &[Sample],
    degree: usize,
    scale: TimeScale,
    origin: f64,
) -> Result<BatchFit> {
    let pts: Vec<(f64, f64)> = window.iter().map(|s| (scale.tau(s.t) - origin, s.y)).collect();
    batch_least_squares(&pts, degree)
}

#[derive(Debug, Clone)]
pub(crate) struct PolyRls {
    scale: TimeScale,
    degree: usize,
    origin: f64,
    last_t: f64,
    pub theta: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl PolyRls {
    /// Fits `window` with the origin on its last sample.
    pub fn from_window(
        window: &[Sample],
        degree: usize,
        scale: TimeScale,
        init: CovarianceInit,
    ) -> Result<(Self, BatchFit)> {
        check_window(window)?;
        let last = window
            .last()
            .ok_or(Error::InsufficientData { needed: degree + 2, got: 0 })?;
        let origin = scale.tau(last.t);
        let fit = local_fit(window, degree, scale, origin)?;
        let p = match init {
            CovarianceInit::ResidualVariance => fit.covariance.clone(),
            CovarianceInit::Unit => fit.gram_inverse.clone(),
        };
        let core = Self { scale, degree, origin, last_t: last.t, theta: fit.theta.clone(), p };
        Ok((core, fit))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Replaces theta and P with a fit whose origin is on the newest buffered sample.
    pub fn reset(&mut self, theta: DVector<f64>, p: DMatrix<f64>, origin: f64) {
        self.theta = theta;
        self.p = p;
        self.origin = origin;
    }

    /// Validates `t_raw`, re-anchors if needed and returns the regressor.
    /// The shift matrix is returned when a re-anchor happened.
    pub fn advance(
        &mut self,
        t_raw: f64,
        y: f64,
    ) -> Result<(RegressorVector, Option<DMatrix<f64>>)> {
        if !t_raw.is_finite() || !y.is_finite() {
            return invalid(format!("non-finite sample ({t_raw}, {y})"));
        }
        if t_raw <= self.last_t {
            return invalid(format!(
                "time must increase strictly: {t_raw} after {}",
                self.last_t
            ));
        }
        self.last_t = t_raw;
        let tau = self.scale.tau(t_raw);
        let mut shift = None;
        if (tau - self.origin).abs() > REBASE_SPAN {
            let t = shift_matrix(tau - self.origin, self.degree);
            self.theta = &t * &self.theta;
            self.p = symmetrize(&(&t * &self.p * t.transpose()));
            self.origin = tau;
            shift = Some(t);
        }
        Ok((poly_basis(tau - self.origin, self.degree)?, shift))
    }

    pub fn predict(&self, phi: &RegressorVector) -> f64 {
        phi.entries().dot(&self.theta)
    }

    /// Current fitted value at raw time `t_raw` (no state change).
    pub fn evaluate(&self, t_raw: f64) -> f64 {
        let tau = self.scale.tau(t_raw) - self.origin;
        let mut acc = 0.0;
        for k in (0..=self.degree).rev() {
            acc = acc * tau + self.theta[k];
        }
        acc
    }

    /// Coefficients of the current fit about another scaled origin.
    pub fn theta_about(&self, origin: f64) -> DVector<f64> {
        shift_matrix(origin - self.origin, self.degree) * &self.theta
    }

    /// Standard RLS update with forgetting factor `lambda`; returns the gain.
    /// A zero residual leaves theta untouched bit for bit.
    pub fn update(
        &mut self,
        phi: &RegressorVector,
        r: f64,
        lambda: f64,
        step_index: usize,
    ) -> Result<DVector<f64>> {
        let x = phi.entries();
        let px = &self.p * x;
        let denom = lambda + x.dot(&px);
        if !(denom >= 1e-12) {
            return Err(Error::NumericalDivergence {
                step_index,
                detail: format!("gain denominator {denom:e}"),
            });
        }
        let k = px / denom;
        if r != 0.0 {
            self.theta.axpy(r, &k, 1.0);
        }
        let xtp = x.transpose() * &self.p;
        let mut p = &self.p - &k * xtp;
        p /= lambda;
        self.p = symmetrize(&p);
        if !self.theta.iter().all(|v| v.is_finite()) || !self.p.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalDivergence {
                step_index,
                detail: "non-finite parameter or covariance".into(),
            });
        }
        Ok(k)
    }
}

/// Outlier gate plus the lock-out recovery shared by the gated filters.
#[derive(Debug, Clone)]
pub(crate) struct Gate {
    enabled: bool,
    threshold: f64,
    max_run: usize,
    run: usize,
    buffer: VecDeque<Sample>,
    capacity: usize,
}

impl Gate {
    pub fn new(enabled: bool, sigma2_target: f64, max_run: usize, window: &[Sample]) -> Self {
        Self {
            enabled,
            threshold: 3.0 * sigma2_target.sqrt(),
            max_run,
            run: 0,
            buffer: window.iter().copied().collect(),
            capacity: window.len(),
        }
    }

    pub fn rejects(&self, residual: f64) -> bool {
        self.enabled && residual.abs() > self.threshold
    }

    /// Records the sample and the gate decision; returns true when a refit is due.
    pub fn record(&mut self, sample: Sample, rejected: bool) -> bool {
        if self.max_run > 0 {
            if self.buffer.len() == self.capacity {
                self.buffer.pop_front();
            }
            self.buffer.push_back(sample);
        }
        self.run = if rejected { self.run + 1 } else { 0 };
        if self.max_run > 0 && self.run >= self.max_run {
            self.run = 0;
            true
        } else {
            false
        }
    }

    /// Trimmed batch refit on the buffered samples, origin on the newest one.
    ///
    /// Solved through the Gram matrix: the local coordinate keeps it well
    /// conditioned and this runs inside the step loop.
    pub fn refit(&self, core: &mut PolyRls, scale: TimeScale, step_index: usize) -> Result<()> {
        let origin = scale.tau(self.buffer.back().expect("buffer is never empty").t);
        let degree = core.degree();
        let pts: Vec<(f64, f64)> =
            self.buffer.iter().map(|s| (scale.tau(s.t) - origin, s.y)).collect();
        let failed = || Error::NumericalDivergence { step_index, detail: "refit failed".into() };

        let first = gram_fit(&pts, degree, None).ok_or_else(failed)?;
        let keep: Vec<bool> = pts
            .iter()
            .map(|&(tau, y)| (y - horner(&first.0, tau)).abs() <= self.threshold)
            .collect();
        let kept = keep.iter().filter(|&&k| k).count();
        let (theta, gram_inv, sse, n) = if kept >= degree + 2 && kept < pts.len() {
            match gram_fit(&pts, degree, Some(&keep)) {
                Some(fit) => fit,
                None => first,
            }
        } else {
            first
        };
        let sigma2 = sse / (n - degree - 1) as f64;
        let p = gram_inv * sigma2;
        if !p.iter().all(|v| v.is_finite()) {
            return Err(failed());
        }
        core.reset(theta, p, origin);
        Ok(())
    }
}

fn horner(theta: &DVector<f64>, tau: f64) -> f64 {
    theta.iter().rev().fold(0.0, |acc, c| acc * tau + c)
}

/// Least squares through a Cholesky factor of the Gram matrix.
/// Returns `(theta, (Phi^T Phi)^-1, SSE, n)`.
fn gram_fit(
    pts: &[(f64, f64)],
    degree: usize,
    keep: Option<&[bool]>,
) -> Option<(DVector<f64>, DMatrix<f64>, f64, usize)> {
    let cols = degree + 1;
    let mut gram = DMatrix::zeros(cols, cols);
    let mut rhs = DVector::zeros(cols);
    let mut phi = vec![0.0; cols];
    let mut n = 0;
    for (i, &(tau, y)) in pts.iter().enumerate() {
        if keep.is_some_and(|k| !k[i]) {
            continue;
        }
        n += 1;
        let mut acc = 1.0;
        for v in phi.iter_mut() {
            *v = acc;
            acc *= tau;
        }
        for a in 0..cols {
            rhs[a] += phi[a] * y;
            for b in a..cols {
                gram[(a, b)] += phi[a] * phi[b];
            }
        }
    }
    if n < cols + 1 {
        return None;
    }
    gram.fill_lower_triangle_with_upper_triangle();
    let chol = gram.cholesky()?;
    let theta = chol.solve(&rhs);
    let gram_inv = symmetrize(&chol.inverse());
    let sse = pts
        .iter()
        .enumerate()
        .filter(|(i, _)| keep.is_none_or(|k| k[*i]))
        .map(|(_, &(tau, y))| (y - horner(&theta, tau)).powi(2))
        .sum();
    Some((theta, gram_inv, sse, n))
}
