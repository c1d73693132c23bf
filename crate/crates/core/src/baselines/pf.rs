//! Scalar bootstrap particle filter with a random-walk state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_init_len, FilterOutput, StreamingFilter};
use crate::error::{invalid, Result};
use crate::recursive::{check_window, local_fit};
use crate::regression::{Sample, TimeScale};

const RNG_STREAM: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfConfig {
    pub particle_count: usize,
    pub process_std: f64,
    pub measurement_std: f64,
    /// Resample when the effective sample size drops below this fraction of the particles.
    pub resample_threshold: f64,
    pub seed: u64,
    pub init_window: usize,
    /// Degree of the window fit whose last value seeds the particles.
    pub init_degree: usize,
    pub time_scale: TimeScale,
}

impl Default for PfConfig {
    fn default() -> Self {
        Self {
            particle_count: 500,
            process_std: 0.3,
            measurement_std: 0.3,
            resample_threshold: 0.5,
            seed: 0,
            init_window: 100,
            init_degree: 4,
            time_scale: TimeScale::default(),
        }
    }
}

impl PfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particle_count < 2 {
            return invalid("particle_count must be at least 2");
        }
        if !(self.process_std >= 0.0 && self.process_std.is_finite()) {
            return invalid("process_std must be finite and >= 0");
        }
        if !(self.measurement_std > 0.0 && self.measurement_std.is_finite()) {
            return invalid("measurement_std must be finite and > 0");
        }
        if !(self.resample_threshold > 0.0 && self.resample_threshold <= 1.0) {
            return invalid("resample_threshold must lie in (0, 1]");
        }
        if self.init_window < self.init_degree + 2 {
            return invalid("init_window must be at least init_degree + 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Pf {
    config: PfConfig,
    particles: Vec<f64>,
    weights: Vec<f64>,
    log_w: Vec<f64>,
    rng: ChaCha8Rng,
    last_t: f64,
}

impl Pf {
    /// Particles spread by `measurement_std` around the window fit's last value.
    pub fn init(window: &[Sample], config: &PfConfig) -> Result<Self> {
        config.validate()?;
        check_init_len(window, config.init_window)?;
        check_window(window)?;
        let last = window[window.len() - 1];
        let origin = config.time_scale.tau(last.t);
        let fit = local_fit(window, config.init_degree, config.time_scale, origin)?;
        let centre = fit.theta[0];
        let mut rng = Self::rng(config.seed);
        let particles = (0..config.particle_count)
            .map(|_| centre + config.measurement_std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut pf = Self::from_particles(particles, config)?;
        pf.rng = rng;
        pf.last_t = last.t;
        Ok(pf)
    }

    /// Starts from explicit, equally weighted particles.
    pub fn from_particles(particles: Vec<f64>, config: &PfConfig) -> Result<Self> {
        config.validate()?;
        if particles.len() != config.particle_count {
            return invalid("particle vector length must equal particle_count");
        }
        let n = particles.len();
        Ok(Self {
            config: config.clone(),
            particles,
            weights: vec![1.0 / n as f64; n],
            log_w: vec![0.0; n],
            rng: Self::rng(config.seed),
            last_t: f64::NEG_INFINITY,
        })
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(RNG_STREAM);
        rng
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn particles(&self) -> &[f64] {
        &self.particles
    }

    fn weighted_mean(&self) -> f64 {
        self.particles.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    fn systematic_resample(&mut self) {
        let n = self.particles.len();
        let step = 1.0 / n as f64;
        let mut u = self.rng.random::<f64>() * step;
        let mut cum = self.weights[0];
        let mut j = 0;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            while u > cum && j + 1 < n {
                j += 1;
                cum += self.weights[j];
            }
            out.push(self.particles[j]);
            u += step;
        }
        self.particles = out;
        self.weights.fill(step);
    }
}

impl StreamingFilter for Pf {
    fn step(&mut self, t_raw: f64, y: f64) -> Result<FilterOutput> {
        if !y.is_finite() {
            return invalid(format!("non-finite measurement {y}"));
        }
        if !t_raw.is_finite() || t_raw <= self.last_t {
            return invalid(format!("time must increase strictly: {t_raw} after {}", self.last_t));
        }
        self.last_t = t_raw;

        let q = self.config.process_std;
        for x in &mut self.particles {
            *x += q * self.rng.sample::<f64, _>(StandardNormal);
        }
        let prediction = self.weighted_mean();

        // Likelihood weighting in the log domain; all raw likelihoods
        // underflowing to zero counts as a degenerate step.
        let inv = 1.0 / (2.0 * self.config.measurement_std.powi(2));
        let mut max_lw = f64::NEG_INFINITY;
        let mut max_ll = f64::NEG_INFINITY;
        for ((lw, &x), &w) in self.log_w.iter_mut().zip(&self.particles).zip(&self.weights) {
            let ll = -(y - x).powi(2) * inv;
            *lw = w.ln() + ll;
            max_lw = max_lw.max(*lw);
            max_ll = max_ll.max(ll);
        }
        let degenerate = !(max_ll.exp() > 0.0) || !max_lw.is_finite();
        if degenerate {
            let n = self.weights.len() as f64;
            self.weights.fill(1.0 / n);
        } else {
            let mut sum = 0.0;
            for (w, lw) in self.weights.iter_mut().zip(&self.log_w) {
                *w = (lw - max_lw).exp();
                sum += *w;
            }
            for w in &mut self.weights {
                *w /= sum;
            }
        }
        let estimate = self.weighted_mean();

        let ess = 1.0 / self.weights.iter().map(|w| w * w).sum::<f64>();
        if ess < self.config.resample_threshold * self.particles.len() as f64 {
            self.systematic_resample();
        }
        Ok(FilterOutput { degenerate, ..FilterOutput::plain(prediction, estimate, y - prediction) })
    }
}
