//! On-disk response cache.
//!
//! Layout: `<dir>/<k[0..2]>/<k>.json`, where `k` is the sha256 of the
//! length-prefixed `(model_id, content_hash, temperature)` triple. Each file
//! holds a [`CacheEntry`]. Writes go to a unique temporary file in the same
//! directory and are renamed into place, so concurrent writers never expose
//! a partial entry.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use triage_core::digest::sha256_hex_parts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub model_id: String,
    pub content_hash: String,
    pub temperature: f64,
    pub response: String,
}

#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    counter: AtomicU64,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            counter: AtomicU64::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(model_id: &str, content_hash: &str, temperature: f64) -> String {
        let t = temperature.to_bits().to_be_bytes();
        sha256_hex_parts(&[model_id.as_bytes(), content_hash.as_bytes(), &t])
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    /// A stored response; unreadable or mismatched entries count as misses.
    pub fn get(&self, model_id: &str, content_hash: &str, temperature: f64) -> Option<String> {
        let bytes = fs::read(self.path(&Self::key(model_id, content_hash, temperature))).ok()?;
        let e: CacheEntry = serde_json::from_slice(&bytes).ok()?;
        (e.model_id == model_id && e.content_hash == content_hash && e.temperature.to_bits() == temperature.to_bits())
            .then_some(e.response)
    }

    pub fn put(&self, model_id: &str, content_hash: &str, temperature: f64, response: &str) -> io::Result<()> {
        let key = Self::key(model_id, content_hash, temperature);
        let path = self.path(&key);
        let parent = path.parent().expect("cache path has a parent");
        fs::create_dir_all(parent)?;
        let entry = CacheEntry {
            model_id: model_id.into(),
            content_hash: content_hash.into(),
            temperature,
            response: response.into(),
        };
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let tmp = parent.join(format!(".{key}.{}.{n}.tmp", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(&entry)?)?;
        fs::rename(&tmp, &path).inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        fs::read_dir(&self.dir)
            .into_iter()
            .flatten()
            .flatten()
            .filter(|e| e.path().is_dir())
            .flat_map(|e| fs::read_dir(e.path()).into_iter().flatten().flatten())
            .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
