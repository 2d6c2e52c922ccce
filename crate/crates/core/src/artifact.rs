//! Versioned artifact envelopes and run manifests.
//!
//! Artifacts are deterministic: they never contain timestamps. Wall time
//! lives only in the manifest written next to each artifact.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const CRATE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Certificate,
    Charset,
    Gap,
    Solution,
    Lifetime,
    Measure,
    Report,
}

impl ArtifactKind {
    pub fn label(self) -> &'static str {
        match self {
            ArtifactKind::Certificate => "genericity certificate",
            ArtifactKind::Charset => "characteristic components",
            ArtifactKind::Gap => "spectral gap",
            ArtifactKind::Solution => "quasi-periodic solution",
            ArtifactKind::Lifetime => "lifetime run",
            ArtifactKind::Measure => "measure estimates",
            ArtifactKind::Report => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<P> {
    pub format_version: u32,
    pub kind: ArtifactKind,
    pub config_hash: String,
    pub rng_seed: u64,
    /// Command-line parameters that refined the config for this run.
    pub parameters: serde_json::Value,
    pub payload: P,
}

impl<P: Serialize> Envelope<P> {
    pub fn new(kind: ArtifactKind, config_hash: &str, rng_seed: u64, parameters: serde_json::Value, payload: P) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind,
            config_hash: config_hash.to_string(),
            rng_seed,
            parameters,
            payload,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

impl<P: DeserializeOwned> Envelope<P> {
    pub fn from_json(s: &str) -> Result<Self> {
        let env: Self = serde_json::from_str(s).map_err(|e| Error::Artifact(format!("cannot parse artifact: {e}")))?;
        if env.format_version != FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "format version {} is not supported (expected {FORMAT_VERSION})",
                env.format_version
            )));
        }
        Ok(env)
    }
}

/// Header fields shared by every envelope, readable without knowing the
/// payload type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeHeader {
    pub format_version: u32,
    pub kind: ArtifactKind,
    pub config_hash: String,
    pub rng_seed: u64,
}

pub fn read_header(s: &str) -> Result<EnvelopeHeader> {
    serde_json::from_str(s).map_err(|e| Error::Artifact(format!("not an artifact: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact: String,
    pub artifact_sha256: String,
    pub kind: ArtifactKind,
    pub config_hash: String,
    pub format_version: u32,
    pub crate_version: String,
    pub rng_seed: u64,
    pub wall_time_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes `bytes` to `path` and its manifest next to it.
pub fn write_with_manifest(
    path: &Path,
    bytes: &[u8],
    kind: ArtifactKind,
    config_hash: &str,
    rng_seed: u64,
    wall_time_seconds: f64,
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    let manifest = Manifest {
        artifact: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        artifact_sha256: sha256_hex(bytes),
        kind,
        config_hash: config_hash.to_string(),
        format_version: FORMAT_VERSION,
        crate_version: CRATE_VERSION.to_string(),
        rng_seed,
        wall_time_seconds,
    };
    std::fs::write(manifest_path(path), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}
