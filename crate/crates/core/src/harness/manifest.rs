use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::artifacts::ArtifactRecord;
use super::commands::{execute, OutputFormat, Stage};
use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::ising::SIGN_CONVENTION;
use crate::mitigate::ZNE_CONVENTION;
use crate::randomize::EnsembleManifest;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub ensemble: u64,
    pub zne_folding: u64,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub created_unix: u64,
    pub stage: Stage,
    pub format: OutputFormat,
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub ensemble: Option<EnsembleManifest>,
    pub sign_convention: String,
    pub zne_convention: String,
    pub artifacts: Vec<ArtifactRecord>,
}

impl RunManifest {
    pub fn new(
        stage: Stage,
        format: OutputFormat,
        config: &ExperimentConfig,
        ensemble: Option<EnsembleManifest>,
        artifacts: Vec<ArtifactRecord>,
    ) -> Self {
        RunManifest {
            tool: "grec-lab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            stage,
            format,
            config: config.clone(),
            seeds: Seeds {
                ensemble: config.plan().seed,
                zne_folding: config.zne().seed,
                shots: config.shot_seed(),
            },
            ensemble,
            sign_convention: SIGN_CONVENTION.into(),
            zne_convention: ZNE_CONVENTION.into(),
            artifacts,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        m.config.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub checked: usize,
    pub artifacts: Vec<ArtifactRecord>,
}

/// Re-executes the manifest's stage into `out` and checks every recorded
/// artifact hash; on any mismatch nothing is left behind. The manifest itself
/// is copied verbatim.
pub fn replay(manifest_path: &Path, out: &Path) -> Result<ReplayReport> {
    let manifest = RunManifest::load(manifest_path)?;
    let original = std::fs::read(manifest_path)?;
    let run = execute(manifest.stage, &manifest.config, out, manifest.format, Some((&manifest, &original)))?;
    Ok(ReplayReport {
        checked: manifest.artifacts.len(),
        artifacts: run.artifacts,
    })
}

/// Compares a fresh run against a manifest.
pub(crate) fn check_replay(manifest: &RunManifest, artifacts: &[ArtifactRecord], ensemble: Option<&EnsembleManifest>) -> Result<()> {
    if manifest.ensemble.as_ref() != ensemble {
        return Err(Error::ReplayMismatch("ensemble manifest".into()));
    }
    for rec in &manifest.artifacts {
        let got = artifacts
            .iter()
            .find(|r| r.path == rec.path)
            .ok_or_else(|| Error::ReplayMismatch(format!("{} was not produced", rec.path)))?;
        if got.sha256 != rec.sha256 {
            return Err(Error::ReplayMismatch(rec.path.clone()));
        }
    }
    Ok(())
}
