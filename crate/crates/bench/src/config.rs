//! Experiment configuration: TOML, versioned, unknown keys rejected.

use std::path::{Path, PathBuf};

use rvmrls::terrain::ScenarioConfig;
use rvmrls::FilterSpec;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::BenchError;

pub const SCHEMA_VERSION: u32 = 1;

/// A scenario with its display name. In TOML the name sits next to the
/// scenario fields: `[[scenarios]] name = "with_outliers" outlier_fraction = 0.1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedScenario {
    pub name: String,
    pub scenario: ScenarioConfig,
}

/// An algorithm entry: `name`, `kind` and that kind's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedAlgorithm {
    pub name: String,
    pub spec: FilterSpec,
}

fn split_name<E: serde::de::Error>(
    mut value: serde_json::Value,
) -> Result<(String, serde_json::Value), E> {
    let map = value.as_object_mut().ok_or_else(|| E::custom("expected a table"))?;
    let name = match map.remove("name") {
        Some(serde_json::Value::String(s)) => s,
        Some(_) => return Err(E::custom("`name` must be a string")),
        None => return Err(E::custom("missing `name`")),
    };
    Ok((name, value))
}

fn join_name<S: Serializer, T: Serialize>(name: &str, inner: &T, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::Error as _;
    let mut value = serde_json::to_value(inner).map_err(S::Error::custom)?;
    value
        .as_object_mut()
        .ok_or_else(|| S::Error::custom("expected a table"))?
        .insert("name".into(), name.into());
    value.serialize(s)
}

impl<'de> Deserialize<'de> for NamedScenario {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (name, rest) = split_name(serde_json::Value::deserialize(d)?)?;
        let scenario = serde_json::from_value(rest)
            .map_err(|e| D::Error::custom(format!("scenario `{name}`: {e}")))?;
        Ok(Self { name, scenario })
    }
}

impl Serialize for NamedScenario {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        join_name(&self.name, &self.scenario, s)
    }
}

impl<'de> Deserialize<'de> for NamedAlgorithm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (name, rest) = split_name(serde_json::Value::deserialize(d)?)?;
        let spec = serde_json::from_value(rest)
            .map_err(|e| D::Error::custom(format!("algorithm `{name}`: {e}")))?;
        Ok(Self { name, spec })
    }
}

impl Serialize for NamedAlgorithm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        join_name(&self.name, &self.spec, s)
    }
}

fn yes() -> bool {
    true
}

fn three() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Each seed drives both the scenario noise and the particle filter.
    pub seeds: Vec<u64>,
    pub scenarios: Vec<NamedScenario>,
    pub algorithms: Vec<NamedAlgorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub emit_traces: bool,
    /// Measure single-step runtime. Off leaves the `sr_ms` column empty.
    #[serde(default = "yes")]
    pub timing: bool,
    #[serde(default = "three")]
    pub timing_repeats: usize,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !name.starts_with('.')
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |m: String| Err(BenchError::Config(m));
        if self.version != SCHEMA_VERSION {
            return fail(format!("unsupported config version {}", self.version));
        }
        if self.seeds.is_empty() || self.scenarios.is_empty() || self.algorithms.is_empty() {
            return fail("seeds, scenarios and algorithms must all be non-empty".into());
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return fail("seeds must be unique".into());
        }
        for names in [
            self.scenarios.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(),
            self.algorithms.iter().map(|a| a.name.as_str()).collect(),
        ] {
            for (i, n) in names.iter().enumerate() {
                if !valid_name(n) {
                    return fail(format!("invalid name `{n}` (use letters, digits, - _ .)"));
                }
                if names[..i].contains(n) {
                    return fail(format!("duplicate name `{n}`"));
                }
            }
        }
        for s in &self.scenarios {
            s.scenario
                .validate()
                .map_err(|e| BenchError::Config(format!("scenario `{}`: {e}", s.name)))?;
        }
        for a in &self.algorithms {
            a.spec
                .validate()
                .map_err(|e| BenchError::Config(format!("algorithm `{}`: {e}", a.name)))?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form (defaults filled, keys sorted).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serialises");
        let canonical = serde_json::to_string(&value).expect("value serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Stand-alone scenario file used by `synth`: `version = 1` plus scenario fields.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, BenchError> {
    let mut value: serde_json::Value =
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
    let map = value
        .as_object_mut()
        .ok_or_else(|| BenchError::Config("expected a table".into()))?;
    match map.remove("version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(BenchError::Config(format!("unsupported config version {v}"))),
        None => return Err(BenchError::Config("missing integer `version`".into())),
    }
    let cfg: ScenarioConfig =
        serde_json::from_value(value).map_err(|e| BenchError::Config(e.to_string()))?;
    cfg.validate().map_err(|e| BenchError::Config(e.to_string()))?;
    Ok(cfg)
}
