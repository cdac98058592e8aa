//! Run manifests: config hash, seeds and a checksum for every artifact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<Artifact>,
}

/// Writes artifacts below `root` and keeps the manifest in step.
#[derive(Debug)]
pub struct Recorder {
    root: PathBuf,
    manifest: Manifest,
}

impl Recorder {
    pub fn new(root: &Path, command: &str, config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest: Manifest {
                command: command.to_string(),
                config_sha256: sha256_hex(config.to_toml().as_bytes()),
                seeds: Vec::new(),
                artifacts: Vec::new(),
            },
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn add_seeds(&mut self, seeds: impl IntoIterator<Item = u64>) {
        self.manifest.seeds.extend(seeds);
    }

    /// Writes `contents` to `rel` (relative to the root) and records it.
    pub fn write(&mut self, rel: impl AsRef<Path>, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(rel.as_ref());
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.record(rel)?;
        Ok(path)
    }

    /// Records a file that was written by other code.
    pub fn record(&mut self, rel: impl AsRef<Path>) -> Result<(), CliError> {
        let rel = rel.as_ref();
        let bytes = fs::read(self.root.join(rel))?;
        let path = rel.to_string_lossy().replace('\\', "/");
        self.manifest.artifacts.retain(|a| a.path != path);
        self.manifest.artifacts.push(Artifact {
            path,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes `manifest.toml` with artifacts sorted by path.
    pub fn finish(mut self) -> Result<Manifest, CliError> {
        self.manifest.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let text = toml::to_string(&self.manifest).expect("manifest serialises");
        fs::write(self.root.join("manifest.toml"), text)?;
        Ok(self.manifest)
    }
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(dir.join("manifest.toml"))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("bad manifest: {e}")))
    }

    /// Recomputes every checksum; returns the paths that no longer match.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>, CliError> {
        let mut bad = Vec::new();
        for a in &self.artifacts {
            let bytes = fs::read(dir.join(&a.path))?;
            if sha256_hex(&bytes) != a.sha256 {
                bad.push(a.path.clone());
            }
        }
        Ok(bad)
    }
}
