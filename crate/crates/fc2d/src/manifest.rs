//! Run manifests: every number a table prints traces back to one of these.

use crate::error::Result;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Serialize, Default)]
pub struct RunManifest {
    pub command: String,
    pub library_version: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    /// Wall-clock seconds per stage (medians over the repeat count).
    pub timings: BTreeMap<String, f64>,
    pub errors: BTreeMap<String, f64>,
    pub operator_files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).unwrap());
    }

    pub fn timing(&mut self, key: &str, seconds: f64) {
        self.timings.insert(key.to_string(), seconds);
    }

    pub fn error(&mut self, key: &str, value: f64) {
        self.errors.insert(key.to_string(), value);
    }

    pub fn operator_file(&mut self, path: &Path) {
        let hash = std::fs::read(path).map(|b| fnv64(&b)).unwrap_or_default();
        self.operator_files
            .insert(path.display().to_string(), hash);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).unwrap())?;
        Ok(())
    }
}

/// FNV-1a 64-bit content hash, hex-encoded.
pub fn fnv64(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}
