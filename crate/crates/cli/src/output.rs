// SPDX-License-Identifier: Apache-2.0

//! Output files. Every artifact carries the same provenance record: tool
//! version, seed and a SHA-256 of the effective configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const TOOL: &str = "lutdla";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    /// Hashes the canonical JSON of the resolved configuration, so defaults
    /// and command-line overrides are covered as well as the file itself.
    pub fn new<T: Serialize>(command: &'static str, effective: &T, seed: u64) -> Result<Self> {
        let canonical = serde_json::to_vec(effective).map_err(CliError::internal)?;
        let digest = Sha256::digest(&canonical);
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self { tool: TOOL, version: VERSION, command, config_sha256, seed })
    }

    /// One-line header for CSV and JSON-lines files.
    pub fn comment(&self) -> String {
        format!(
            "# {} {} {} config_sha256={} seed={}\n",
            self.tool, self.version, self.command, self.config_sha256, self.seed
        )
    }

    pub fn to_value(&self) -> Value {
        json!(self)
    }
}

/// Writes files below one output directory and remembers what it wrote.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    prov: Provenance,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path, prov: Provenance) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::internal(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), prov, written: Vec::new() })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.prov
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Pretty JSON with the provenance record as the first key. `body`
    /// must serialize as a map.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            provenance: &'a Provenance,
            #[serde(flatten)]
            body: &'a T,
        }
        let mut text = serde_json::to_string_pretty(&Doc { provenance: &self.prov, body }).map_err(CliError::internal)?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    /// CSV or JSON-lines text behind a `#` provenance line.
    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let mut text = self.prov.comment();
        text.push_str(body);
        self.put(name, text.as_bytes())
    }

    pub fn register(&mut self, path: PathBuf) {
        self.written.push(path);
    }
}
