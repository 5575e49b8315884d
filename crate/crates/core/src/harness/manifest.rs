//! Reproducibility manifests written beside every output file.
//!
//! A manifest pins everything a rerun needs to reproduce an output
//! byte-for-byte: the command, the crate version, the root seed, a digest
//! of the effective config, and digests of the input artifacts consumed.
//! Nothing time- or host-dependent goes in.

use std::collections::BTreeMap;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub crate_version: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Digests of consumed artifact files, keyed by file name.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config_json: &str) -> Self {
        Self {
            command: command.into(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config_sha256: sha256_hex(config_json.as_bytes()),
            artifacts: BTreeMap::new(),
        }
    }

    /// Digests an input file under its base name.
    pub fn record_file(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)
            .map_err(|_| Error::MissingArtifact(path.display().to_string()))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.artifacts.insert(name, sha256_hex(&bytes));
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }
}
