//! Output directory with content hashes and a run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha1::{Digest, Sha1};

/// SHA-1 of `blob <len>\0<bytes>`, as `git hash-object` computes it.
pub fn git_blob_sha1(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    format!("{:x}", h.finalize())
}

pub struct OutputDir {
    root: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir { root: root.to_path_buf(), hashes: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::write(self.root.join(name), bytes)?;
        self.hashes.insert(name.to_string(), git_blob_sha1(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json`. The timestamp lives only here so every other
    /// file is reproducible byte for byte.
    pub fn finish(self, manifest: Manifest) -> std::io::Result<()> {
        let record = ManifestRecord {
            command: manifest.command,
            config: manifest.config,
            config_path: manifest.config_path,
            input_sha1: manifest.input_sha1,
            seed: manifest.seed,
            workers: manifest.workers,
            outputs: self.hashes.clone(),
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mut text = serde_json::to_string_pretty(&record).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)
    }
}

pub struct Manifest {
    pub command: &'static str,
    pub config: Value,
    pub config_path: String,
    pub input_sha1: String,
    pub seed: u64,
    pub workers: Option<usize>,
}

#[derive(Serialize)]
struct ManifestRecord {
    command: &'static str,
    config: Value,
    config_path: String,
    input_sha1: String,
    seed: u64,
    workers: Option<usize>,
    outputs: BTreeMap<String, String>,
    version: &'static str,
    timestamp_unix: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git() {
        // `printf 'hello\n' | git hash-object --stdin`
        assert_eq!(git_blob_sha1(b"hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
        assert_eq!(git_blob_sha1(b""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    }
}
