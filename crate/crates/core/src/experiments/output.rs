//! Artifact writing: long-format CSV, plot scripts and run manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::rng::RNG_NAME;

/// One metric value in the long table shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRow {
    pub experiment: String,
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub alpha: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Creates (if needed) the directory owned by one verb.
pub fn verb_dir(root: &Path, verb: &str) -> Result<PathBuf> {
    let dir = root.join(verb);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// SHA-256 of the canonical TOML serialization of the configuration.
/// The output directory does not affect results and is left out.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let mut c = config.clone();
    c.output = PathBuf::new();
    Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
}

/// Record of one run. Two runs with equal manifests produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub verb: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub crate_version: String,
    pub rng: String,
    pub config: ExperimentConfig,
    /// Files written, relative to the verb directory.
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(verb: &str, config: &ExperimentConfig, seeds: Vec<u64>, mut files: Vec<String>) -> Result<Self> {
        files.sort();
        Ok(Self {
            verb: verb.to_string(),
            config_sha256: config_hash(config)?,
            seeds,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_NAME.to_string(),
            config: config.clone(),
            files,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
        write_text(&path, &text)
    }
}
