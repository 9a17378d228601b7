//! Run manifest: config hash, code version, timestamps, artifact checksums,
//! and the pass/fail outcome of every check the pipeline ran.
//!
//! The manifest itself carries timestamps and is therefore not part of the
//! reproducibility contract; the listed artifact checksums are.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub kind: String,
    pub config_sha256: String,
    pub code_version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub artifacts: Vec<ArtifactRecord>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

pub fn now_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}
