//! Experiment configuration: a single human-editable TOML tree with an
//! explicit schema version. Flags cover the common cases; `--config`
//! loads a full spec.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use ftsens::dyadic::Dyadic;
use ftsens::systems::SystemConfig;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub task: String,
    pub system: SystemConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("ftsens-out")
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub radius: Option<String>,
    pub threshold: Option<String>,
    pub gamma: Option<String>,
    pub gammas: Option<Vec<String>>,
    pub delta: Option<String>,
    pub n_max: Option<u64>,
    pub budget: Option<u64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub pool: Option<usize>,
    pub stages: Option<u64>,
    pub depth: Option<u32>,
    pub catalogs: Option<usize>,
    pub boxes: Option<usize>,
    pub point: Option<Vec<f64>>,
}

pub fn load_spec(path: &PathBuf) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let spec: ExperimentSpec = toml::from_str(&text)
        .with_context(|| format!("cannot parse config {}", path.display()))?;
    if spec.schema_version != SCHEMA_VERSION {
        bail!(
            "config schema version {} unsupported (expected {SCHEMA_VERSION})",
            spec.schema_version
        );
    }
    Ok(spec)
}

/// Exact paths take fractions with power-of-two denominators; anything
/// with a decimal point is rejected so precision can never silently
/// leak into the oracle.
pub fn parse_exact(s: &str) -> Result<Dyadic> {
    if s.contains('.') {
        bail!("`{s}`: exact paths take fractions like 1/8, not decimals");
    }
    Dyadic::parse_fraction(s).map_err(|e| anyhow::anyhow!("{e}"))
}

/// Sampled paths take plain decimals; fraction syntax is rejected to
/// keep the two value languages apart.
pub fn parse_decimal(s: &str) -> Result<f64> {
    if s.contains('/') {
        bail!("`{s}`: sampled paths take decimals like 0.05, not fractions");
    }
    let v: f64 = s.parse().with_context(|| format!("bad decimal `{s}`"))?;
    if !v.is_finite() {
        bail!("`{s}` is not finite");
    }
    Ok(v)
}
