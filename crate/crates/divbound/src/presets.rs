//! Configurations shipped with the binary.

use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::formats::{MeasureFile, RateSpec, SpaceFile};

pub const TINY_GIBBS: &str = include_str!("../presets/tiny-gibbs.json");
pub const PINSKER: &str = include_str!("../presets/pinsker.json");

/// Experiment presets accepted by `genexp --preset`.
pub fn experiment(name: &str) -> CliResult<&'static str> {
    match name {
        "tiny-gibbs" => Ok(TINY_GIBBS),
        other => Err(CliError::Config(format!("unknown experiment preset `{other}` (available: tiny-gibbs)"))),
    }
}

/// A complete transportation-inequality check.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TciPreset {
    pub space: SpaceFile,
    pub mu: MeasureFile,
    pub divergence: String,
    pub phi: RateSpec,
    pub trials: u64,
    pub seed: u64,
}

/// TCI presets accepted by `tci-check --preset`.
pub fn tci(name: &str) -> CliResult<TciPreset> {
    match name {
        "pinsker" => crate::formats::parse_json(PINSKER, "preset pinsker"),
        other => Err(CliError::Config(format!("unknown tci preset `{other}` (available: pinsker)"))),
    }
}
