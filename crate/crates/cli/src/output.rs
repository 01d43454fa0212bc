use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Files written by one run, with their hashes for the provenance record.
pub struct Artifacts {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Provenance<'a, C: Serialize> {
    command: &'a str,
    config: &'a C,
    seed: Option<u64>,
    artifacts: &'a BTreeMap<String, String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hashes: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        self.hashes
            .insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `provenance.json`; must come last.
    pub fn finish<C: Serialize>(
        self,
        command: &str,
        config: &C,
        seed: Option<u64>,
    ) -> Result<(), CliError> {
        let record = Provenance {
            command,
            config,
            seed,
            artifacts: &self.hashes,
        };
        let mut text = serde_json::to_string_pretty(&record).expect("serializable");
        text.push('\n');
        let path = self.dir.join("provenance.json");
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    }
}

/// Runs a writer into memory; CSV output to a `Vec` cannot fail for I/O reasons.
pub fn to_bytes<E: std::fmt::Debug>(f: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("in-memory write");
    buf
}
