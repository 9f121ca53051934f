//! Run manifest: what ran, on which inputs, producing which bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use triage_core::digest::sha256_hex;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Ran,
    /// Inputs and outputs matched the previous manifest; nothing was recomputed.
    Reused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub input_digest: String,
    /// Output path relative to the run directory, mapped to its sha256.
    pub outputs: BTreeMap<String, String>,
    pub status: StageStatus,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Stage-specific bookkeeping (request counts, cache hits, row counts).
    #[serde(default)]
    pub notes: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub sampling: u64,
    pub bootstrap: u64,
    pub generator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    pub seeds: SeedRecord,
    pub sampling_rules: String,
    pub stages: Vec<StageRecord>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn file_digest(path: &Path) -> io::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

impl RunManifest {
    pub fn load(run_dir: &Path) -> Option<RunManifest> {
        let bytes = fs::read(run_dir.join(MANIFEST_FILE)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn save(&self, run_dir: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(run_dir.join(MANIFEST_FILE), text)
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Digest of a recorded output, if any stage produced it.
    pub fn output_digest(&self, rel: &str) -> Option<&str> {
        self.stages.iter().find_map(|s| s.outputs.get(rel).map(String::as_str))
    }
}

impl StageRecord {
    /// True when every recorded output still exists with the recorded bytes.
    pub fn outputs_intact(&self, run_dir: &Path) -> bool {
        self.outputs
            .iter()
            .all(|(rel, digest)| file_digest(&run_dir.join(rel)).is_ok_and(|d| &d == digest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intact_detects_edits() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "one").unwrap();
        let mut rec = StageRecord {
            name: "s".into(),
            input_digest: "i".into(),
            outputs: BTreeMap::new(),
            status: StageStatus::Ran,
            started_unix: 0,
            finished_unix: 0,
            notes: BTreeMap::new(),
        };
        rec.outputs.insert("a.txt".into(), file_digest(&dir.path().join("a.txt")).unwrap());
        assert!(rec.outputs_intact(dir.path()));
        fs::write(dir.path().join("a.txt"), "two").unwrap();
        assert!(!rec.outputs_intact(dir.path()));
    }
}
