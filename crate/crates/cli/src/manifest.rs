use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> std::io::Result<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: digest_path(path)?,
        })
    }
}

/// SHA-256 of a file, or of every file in a directory (sorted by name).
pub fn digest_path(path: &Path) -> std::io::Result<String> {
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        entries.sort();
        for p in entries.iter().filter(|p| p.is_file()) {
            let name = p.file_name().unwrap_or_default().to_string_lossy();
            if name == "manifest.json" || name.starts_with('.') {
                continue;
            }
            hasher.update(name.as_bytes());
            hasher.update([0]);
            hasher.update(fs::read(p)?);
        }
    } else {
        hasher.update(fs::read(path)?);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Record of one command run: enough to repeat it.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, FileDigest>,
    pub outputs: BTreeMap<String, FileDigest>,
    pub results: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            results: serde_json::Value::Null,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> std::io::Result<()> {
        self.inputs.insert(role.to_string(), FileDigest::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path) -> std::io::Result<()> {
        self.outputs.insert(role.to_string(), FileDigest::of(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text)
    }
}

/// `<file>.manifest.json` next to a file output, `manifest.json` inside a
/// directory output.
pub fn manifest_path(primary_output: &Path) -> PathBuf {
    if primary_output.is_dir() {
        primary_output.join("manifest.json")
    } else {
        let mut name = primary_output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        primary_output.with_file_name(name)
    }
}
