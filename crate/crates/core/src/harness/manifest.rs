//! Run manifest: the exact config snapshot, seed, content hashes of inputs,
//! and the list of files a run produced.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub created_unix: u64,
    pub command: String,
    pub seed: u64,
    pub config_toml: String,
    pub input_hashes: Vec<InputHash>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InputHash {
    pub name: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> std::io::Result<InputHash> {
    let bytes = std::fs::read(path)?;
    Ok(InputHash {
        name: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config_toml: String) -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            created_unix,
            command: command.to_string(),
            seed,
            config_toml,
            input_hashes: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn record_input(&mut self, path: &Path) -> std::io::Result<()> {
        self.input_hashes.push(hash_file(path)?);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = toml::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
