//! Terrain-following scenario: terrain profile, reference trajectory and
//! noisy, outlier-corrupted altitude measurements.

use std::io::Write;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::regression::Sample;

const NOISE_STREAM: u64 = 1;
const OUTLIER_STREAM: u64 = 2;

/// Outliers are drawn strictly above this many noise standard deviations.
pub const OUTLIER_FLOOR_SIGMAS: f64 = 3.0;

/// `H(t) = A0 exp(-(t - t_c)^2 / (2 sigma^2)) sin(omega t + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainParams {
    pub amplitude: f64,
    pub center: f64,
    pub envelope_sigma: f64,
    pub omega: f64,
    pub phase: f64,
}

impl Default for TerrainParams {
    fn default() -> Self {
        Self { amplitude: 10.0, center: 1000.0, envelope_sigma: 400.0, omega: 0.025, phase: 0.0 }
    }
}

impl TerrainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.envelope_sigma > 0.0 && self.envelope_sigma.is_finite()) {
            return invalid("terrain envelope_sigma must be finite and > 0");
        }
        if ![self.amplitude, self.center, self.omega, self.phase].iter().all(|v| v.is_finite()) {
            return invalid("terrain parameters must be finite");
        }
        Ok(())
    }
}

pub fn terrain_height(t: f64, params: &TerrainParams) -> f64 {
    let d = t - params.center;
    let envelope =
        params.amplitude * (-(d * d) / (2.0 * params.envelope_sigma * params.envelope_sigma)).exp();
    envelope * (params.omega * t + params.phase).sin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Samples at t = 0, 1, ..., N - 1.
    pub sample_count: usize,
    /// Flight clearance above the terrain, metres.
    pub clearance: f64,
    pub noise_variance: f64,
    pub outlier_fraction: f64,
    /// Signed outlier limits in multiples of the noise standard deviation.
    pub outlier_band: [f64; 2],
    /// No outliers are placed before this index.
    pub clean_prefix: usize,
    pub seed: u64,
    pub terrain: TerrainParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            sample_count: 2000,
            clearance: 20.0,
            noise_variance: 0.09,
            outlier_fraction: 0.10,
            outlier_band: [-30.0, 30.0],
            clean_prefix: 100,
            seed: 0,
            terrain: TerrainParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn outlier_count(&self) -> usize {
        (self.outlier_fraction * self.sample_count as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.terrain.validate()?;
        if self.sample_count == 0 {
            return invalid("sample_count must be > 0");
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return invalid("noise_variance must be finite and >= 0");
        }
        if !self.clearance.is_finite() {
            return invalid("clearance must be finite");
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return invalid("outlier_fraction must lie in [0, 1]");
        }
        let [low, high] = self.outlier_band;
        if self.outlier_count() > 0 && !(low < -OUTLIER_FLOOR_SIGMAS && high > OUTLIER_FLOOR_SIGMAS)
        {
            return invalid(format!(
                "outlier_band [{low}, {high}] must reach beyond +/-{OUTLIER_FLOOR_SIGMAS} sigma on both sides"
            ));
        }
        if !(low.is_finite() && high.is_finite()) {
            return invalid("outlier_band must be finite");
        }
        let room = self.sample_count.saturating_sub(self.clean_prefix);
        if self.outlier_count() > room {
            return invalid(format!(
                "{} outliers do not fit into the {room} samples after the clean prefix",
                self.outlier_count()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTrace {
    pub times: Vec<f64>,
    pub terrain: Vec<f64>,
    pub reference: Vec<f64>,
    pub measurement: Vec<f64>,
    pub noise: Vec<f64>,
    pub outlier_mask: Vec<bool>,
    pub injected_outliers: Vec<f64>,
}

impl ScenarioTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn samples(&self) -> Vec<Sample> {
        self.times.iter().zip(&self.measurement).map(|(&t, &y)| Sample::new(t, y)).collect()
    }

    /// CSV with header `t,H,p,z,outlier`, values at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,H,p,z,outlier")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                self.times[i],
                self.terrain[i],
                self.reference[i],
                self.measurement[i],
                u8::from(self.outlier_mask[i])
            )?;
        }
        Ok(())
    }
}

/// Builds the trace for `config`.
///
/// Noise and outliers come from separate streams of the same seed, so the
/// noise sequence is shared between scenarios that differ only in outliers.
pub fn synthesize(config: &ScenarioConfig) -> Result<ScenarioTrace> {
    config.validate()?;
    let n = config.sample_count;
    let sigma = config.noise_variance.sqrt();

    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    noise_rng.set_stream(NOISE_STREAM);
    let mut outlier_rng = ChaCha8Rng::seed_from_u64(config.seed);
    outlier_rng.set_stream(OUTLIER_STREAM);

    let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let terrain: Vec<f64> = times.iter().map(|&t| terrain_height(t, &config.terrain)).collect();
    let reference: Vec<f64> = terrain.iter().map(|h| h + config.clearance).collect();
    let noise: Vec<f64> =
        (0..n).map(|_| sigma * noise_rng.sample::<f64, _>(StandardNormal)).collect();

    let mut outlier_mask = vec![false; n];
    let mut injected_outliers = vec![0.0; n];
    let count = config.outlier_count();
    if count > 0 {
        let mut positions: Vec<usize> =
            index::sample(&mut outlier_rng, n - config.clean_prefix, count).into_vec();
        positions.sort_unstable();
        let [low, high] = config.outlier_band;
        for i in positions {
            let i = i + config.clean_prefix;
            let positive = outlier_rng.random_bool(0.5);
            let bound = if positive { high } else { -low };
            let u: f64 = outlier_rng.random();
            let magnitude = OUTLIER_FLOOR_SIGMAS + (bound - OUTLIER_FLOOR_SIGMAS) * (1.0 - u);
            outlier_mask[i] = true;
            injected_outliers[i] = if positive { magnitude } else { -magnitude } * sigma;
        }
    }

    let measurement = (0..n).map(|i| reference[i] + noise[i] + injected_outliers[i]).collect();
    Ok(ScenarioTrace {
        times,
        terrain,
        reference,
        measurement,
        noise,
        outlier_mask,
        injected_outliers,
    })
}
