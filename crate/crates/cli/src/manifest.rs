use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{io, CliError};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    /// sha256 of the input bytes; `None` when there is no input file.
    pub input_digest: Option<String>,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub artifacts: Vec<String>,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects artifacts for one run and writes them with a manifest.
pub struct Run {
    out: PathBuf,
    manifest: RunManifest,
}

impl Run {
    pub fn start(subcommand: &str, out: &Path, input: Option<&[u8]>) -> Self {
        Self {
            out: out.to_path_buf(),
            manifest: RunManifest {
                subcommand: subcommand.to_string(),
                parameters: BTreeMap::new(),
                input_digest: input.map(digest),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                started: now(),
                finished: String::new(),
                artifacts: Vec::new(),
            },
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.manifest.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        if self.manifest.artifacts.is_empty() {
            std::fs::create_dir_all(&self.out).map_err(|e| io(&self.out, e))?;
        }
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| io(&path, e))?;
        self.manifest.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let s = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        self.write(name, &(s + "\n"))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.manifest.finished = now();
        std::fs::create_dir_all(&self.out).map_err(|e| io(&self.out, e))?;
        let path = self.out.join("manifest.json");
        let s = serde_json::to_string_pretty(&self.manifest).expect("manifest serialises");
        std::fs::write(&path, s + "\n").map_err(|e| io(&path, e))
    }
}
