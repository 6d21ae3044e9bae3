//! Run manifests: what was run, on which inputs, with which settings.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use meetsense::config::MeetSenseConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub seed: Option<u64>,
    pub config: MeetSenseConfig,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn hash_all(paths: &[PathBuf]) -> Result<Vec<FileHash>> {
    let mut files: Vec<PathBuf> = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .collect();
            inner.sort();
            files.extend(hash_all(&inner)?.into_iter().map(|h| PathBuf::from(h.path)));
        } else if p.is_file() {
            files.push(p.clone());
        }
    }
    files.sort();
    files.dedup();
    files
        .iter()
        .map(|f| Ok(FileHash { path: f.display().to_string(), sha256: sha256_file(f)? }))
        .collect()
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects manifest fields over the course of one run.
pub struct ManifestBuilder {
    command: Vec<String>,
    seed: Option<u64>,
    config: MeetSenseConfig,
    inputs: Vec<PathBuf>,
    started_at: String,
}

impl ManifestBuilder {
    pub fn start(config: &MeetSenseConfig) -> Self {
        Self {
            command: std::env::args().collect(),
            seed: None,
            config: config.clone(),
            inputs: Vec::new(),
            started_at: now(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) {
        self.inputs.push(path.into());
    }

    pub fn finish(self, outputs: &[PathBuf]) -> Result<RunManifest> {
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command,
            seed: self.seed,
            config: self.config,
            inputs: hash_all(&self.inputs)?,
            outputs: hash_all(outputs)?,
            started_at: self.started_at,
            finished_at: now(),
        })
    }

    /// Finishes and writes the manifest to `path`.
    pub fn write(self, path: &Path, outputs: &[PathBuf]) -> Result<()> {
        let m = self.finish(outputs)?;
        let text = serde_json::to_string_pretty(&m)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// Manifest location for an output: `<dir>/manifest.json` or `<file>.manifest.json`.
pub fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("manifest.json")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }
}
