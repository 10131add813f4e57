use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        Self { path: path.display().to_string(), sha256: sha256_hex(bytes) }
    }
}

/// Provenance record written next to every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub options: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub version: &'static str,
    pub elapsed_ms: u128,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

impl RunManifest {
    pub fn write_next_to(&self, out: &Path) -> std::io::Result<PathBuf> {
        let path = manifest_path(out);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serialises");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
