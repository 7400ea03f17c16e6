use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Record of one run: parameters and content digests of every file read or
/// written, so results can be traced and re-checked.
#[derive(Debug, Default, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_time_secs: f64,
}

pub fn digest(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl RunManifest {
    pub fn param(&mut self, key: &str, v: impl Display) -> &mut Self {
        self.params.insert(key.to_string(), v.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> std::io::Result<()> {
        self.inputs.insert(path.display().to_string(), digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> std::io::Result<()> {
        self.outputs.insert(path.display().to_string(), digest(path)?);
        Ok(())
    }

    pub fn finish(&mut self, start: Instant, path: &Path) -> std::io::Result<()> {
        self.wall_time_secs = start.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        fs::write(path, text + "\n")
    }
}
