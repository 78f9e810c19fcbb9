//! Synthetic scenario files: JSON with the `ScenarioSpec` field names.

use std::path::Path;

use gtforge_core::synth::ScenarioSpec;

use super::read_bytes;
use crate::error::{Error, Result, ResultExt};

pub fn parse_scenario(text: &[u8]) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec = serde_json::from_slice(text).map_err(|e| Error::Parse(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn read_scenario(path: &Path) -> Result<ScenarioSpec> {
    parse_scenario(&read_bytes(path)?).in_file(path)
}
