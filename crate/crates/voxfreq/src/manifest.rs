//! Run manifests: per-command records of inputs (with content digests),
//! outputs, effective configuration, and timing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// One input file and the SHA-256 of its on-disk bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record written next to every command's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Every effective parameter after flag/config-file/default resolution.
    pub config: serde_json::Value,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
    pub version: String,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.into(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_seconds: 0.0,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        self.inputs.push(InputRecord { path: path.display().to_string(), sha256: hex });
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

/// Manifest path next to an output file: the file name minus `.gz` and one
/// format extension, plus `.manifest.json`.
pub fn sibling_manifest_path(out: &Path) -> PathBuf {
    let mut stem = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for ext in [".gz", ".nii", ".json", ".csv"] {
        if let Some(s) = stem.strip_suffix(ext) {
            stem = s.to_string();
        }
    }
    out.with_file_name(format!("{stem}.manifest.json"))
}
