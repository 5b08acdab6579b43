//! Per-run manifest for reproducibility.
//!
//! Every subcommand writes one: the resolved config hash, crate version,
//! and output counts. The timestamp lives here and only here, so all
//! other outputs are byte-reproducible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub crate_version: String,
    pub config_sha256: String,
    pub counts: BTreeMap<String, u64>,
    pub timestamp_unix_secs: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config_sha256: String) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256,
            counts: BTreeMap::new(),
            timestamp_unix_secs: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn count(&mut self, key: &str, value: u64) -> &mut Self {
        self.counts.insert(key.to_string(), value);
        self
    }

    /// Write to `<reports_dir>/manifest-<subcommand>.json`.
    pub fn write(&self, reports_dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(reports_dir)?;
        let path = reports_dir.join(format!("manifest-{}.json", self.subcommand));
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_writes_and_reloads() {
        let dir = tempfile::TempDir::new().unwrap();
        let mut manifest = RunManifest::new("stats", "abc123".into());
        manifest.count("instances", 3).count("problems", 2);
        let path = manifest.write(dir.path()).unwrap();
        let loaded: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(loaded.counts["instances"], 3);
        assert_eq!(loaded.subcommand, "stats");
    }
}
