//! Single-writer output directory that removes what it wrote unless committed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug)]
pub struct ArtifactStore {
    root: PathBuf,
    created_root: bool,
    written: Vec<ArtifactRecord>,
    committed: bool,
}

impl ArtifactStore {
    pub fn create(root: &Path) -> Result<Self> {
        let created_root = !root.exists();
        fs::create_dir_all(root)?;
        Ok(ArtifactStore {
            root: root.to_path_buf(),
            created_root,
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if name.contains("..") || Path::new(name).is_absolute() {
            return Err(Error::InvalidParameter(format!("artifact name {name:?}")));
        }
        if self.written.iter().any(|r| r.path == name) {
            return Err(Error::InvalidParameter(format!("artifact {name} written twice")));
        }
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        // Record first so a failed write is still cleaned up.
        self.written.push(ArtifactRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        fs::write(&path, bytes)?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn records(&self) -> &[ArtifactRecord] {
        &self.written
    }

    /// Keeps the files and returns their records.
    pub fn commit(mut self) -> Vec<ArtifactRecord> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for ArtifactStore {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for r in &self.written {
            let _ = fs::remove_file(self.root.join(&r.path));
        }
        if self.created_root {
            let _ = fs::remove_dir(&self.root);
        }
    }
}
