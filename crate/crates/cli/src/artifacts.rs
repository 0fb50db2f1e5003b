//! Output directory bookkeeping and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub status: String,
    pub exit_code: i32,
    pub stages_completed: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<FileEntry>,
}

/// Writes files under one root and remembers their hashes.
pub struct Artifacts {
    root: PathBuf,
    files: BTreeMap<String, FileEntry>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("cannot write {}: {e}", path.display()))
}

impl Artifacts {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(Self {
            root,
            files: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(rel);
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.files.insert(
            rel.to_string(),
            FileEntry {
                path: rel.to_string(),
                sha256: hex::encode(Sha256::digest(bytes)),
                bytes: bytes.len(),
            },
        );
        log::info!("wrote {}", path.display());
        Ok(())
    }

    /// Renders into a buffer with `f`, then writes it.
    pub fn write_with<F>(&mut self, rel: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> wellcast_core::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::context(e, rel))?;
        self.write(rel, &buf)
    }

    pub fn entries(&self) -> impl Iterator<Item = &FileEntry> + '_ {
        self.files.values()
    }

    pub fn write_manifest(&self, mut manifest: Manifest) -> Result<(), CliError> {
        manifest.files = self.files.values().cloned().collect();
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Data(format!("cannot render manifest: {e}")))?;
        let path = self.path(MANIFEST);
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
    }
}
