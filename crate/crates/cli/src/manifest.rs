//! Run manifests and CSV emission.
//!
//! Every experiment run writes a `manifest.json` beside its CSVs recording
//! the tool version, the fully resolved configuration, the seed, wall-clock
//! bounds, and a SHA-256 digest per output file. Re-running from a manifest
//! must reproduce every CSV byte for byte; the digests make that checkable.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fademac_core::Table;

use crate::config::Resolved;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// File name relative to the manifest's directory.
    pub file: String,
    /// Lowercase hex SHA-256 of the file contents.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    /// Unix timestamps (seconds); informational only, excluded from
    /// reproducibility comparisons.
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub config: Resolved,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn begin(experiment: &str, config: &Resolved) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: experiment.to_string(),
            seed: config.experiment.base_seed,
            started_unix_s: unix_now(),
            finished_unix_s: 0,
            config: config.clone(),
            outputs: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix_s = unix_now();
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self).context("serializing manifest")?;
        std::fs::write(&path, json)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

/// Writes a table as CSV into `dir` and records it in the manifest.
///
/// Output is UTF-8 with `\n` line endings; floats use Rust's shortest
/// round-trip formatting so identical data yields identical bytes. An empty
/// table still gets its header line.
pub fn emit_csv(manifest: &mut RunManifest, dir: &Path, name: &str, table: &Table) -> Result<PathBuf> {
    let csv = table.to_csv();
    let path = dir.join(name);
    std::fs::write(&path, csv.as_bytes())
        .with_context(|| format!("writing output {}", path.display()))?;
    manifest.outputs.push(OutputRecord {
        file: name.to_string(),
        sha256: sha256_hex(csv.as_bytes()),
    });
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn digest_matches_known_vector() {
        // SHA-256("abc") from the FIPS 180 test vectors.
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn emit_csv_writes_header_for_empty_table() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(None).unwrap();
        let mut m = RunManifest::begin("demo", &config);
        let t = Table::new(["a", "b"]);
        let path = emit_csv(&mut m, dir.path(), "empty.csv", &t).unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), "a,b\n");
        assert_eq!(m.outputs.len(), 1);
        assert_eq!(m.outputs[0].file, "empty.csv");
    }

    #[test]
    fn emit_csv_reports_path_on_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("no_such_subdir");
        let config = parse_config(None).unwrap();
        let mut m = RunManifest::begin("demo", &config);
        let t = Table::new(["a"]);
        let err = emit_csv(&mut m, &missing, "x.csv", &t).unwrap_err();
        assert!(format!("{err:#}").contains("no_such_subdir"), "{err:#}");
    }

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(None).unwrap();
        let mut m = RunManifest::begin("demo", &config);
        m.finish();
        let path = m.write(dir.path()).unwrap();
        let back = RunManifest::read(&path).unwrap();
        assert_eq!(m, back);
    }
}
