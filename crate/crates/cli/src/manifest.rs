//! Run manifests: the reproducibility record written at the end of a run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub code_version: String,
    pub master_seed: u64,
    pub wall_time_s: f64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub files: Vec<String>,
    /// The effective configuration; feeding this manifest back to `run`
    /// reproduces the data files byte for byte.
    pub config: serde_json::Value,
}

impl RunManifest {
    /// Write atomically: temp file in the same directory, then rename.
    pub fn write_atomic(&self, dir: &Path) -> anyhow::Result<()> {
        let tmp = dir.join("manifest.json.tmp");
        let fin = dir.join("manifest.json");
        let body = serde_json::to_vec_pretty(self)?;
        fs::write(&tmp, body)?;
        fs::rename(&tmp, &fin)?;
        Ok(())
    }
}
