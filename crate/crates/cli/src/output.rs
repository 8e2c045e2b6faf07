//! Atomic artifact directories and manifests.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub preset: Option<String>,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// Command-specific settings (figure name, basis, snapshot steps...).
    #[serde(default)]
    pub settings: serde_json::Value,
    pub outputs: Vec<OutputEntry>,
    pub wall_clock_seconds: f64,
    pub workers: Option<usize>,
    pub available_parallelism: usize,
}

/// Artifacts are written into a hidden sibling directory and renamed into
/// place once the manifest is complete. Dropping an uncommitted staging
/// directory removes it.
pub struct Staging {
    target: PathBuf,
    dir: PathBuf,
    replace: bool,
    committed: bool,
}

impl Staging {
    pub fn create(target: &Path, replace: bool) -> Result<Self> {
        if target.exists() {
            let empty = fs::read_dir(target).map(|mut d| d.next().is_none()).unwrap_or(false);
            if !empty && !replace {
                return Err(io::Error::new(
                    io::ErrorKind::AlreadyExists,
                    format!("{} exists and is not empty (use --force to replace it)", target.display()),
                )
                .into());
            }
        }
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        let name =
            target.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
        let dir = parent.join(format!(".{name}.tmp-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Staging { target: target.to_path_buf(), dir, replace, committed: false })
    }

    /// Path of a relative artifact, creating its parent directories.
    pub fn path(&self, rel: &str) -> Result<PathBuf> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(p)
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(rel)?;
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Digests every staged file, writes the manifest and moves the
    /// directory into place.
    pub fn commit(mut self, mut manifest: Manifest, started: Instant) -> Result<PathBuf> {
        let mut files = Vec::new();
        collect_files(&self.dir, &self.dir, &mut files)?;
        files.sort();
        manifest.outputs = files.iter().map(|rel| digest_entry(&self.dir, rel)).collect::<Result<_>>()?;
        manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
        self.write_json(MANIFEST, &manifest)?;
        if self.target.exists() {
            if !self.replace && fs::read_dir(&self.target)?.next().is_some() {
                return Err(io::Error::new(
                    io::ErrorKind::AlreadyExists,
                    format!("{} appeared during the run", self.target.display()),
                )
                .into());
            }
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.dir, &self.target)
            .with_context(|| format!("moving results to {}", self.target.display()))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("inside staging dir");
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            if rel != MANIFEST {
                out.push(rel);
            }
        }
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn digest_entry(dir: &Path, rel: &str) -> Result<OutputEntry> {
    let bytes = fs::read(dir.join(rel))?;
    Ok(OutputEntry { path: rel.to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
}
