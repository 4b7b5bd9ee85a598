//! `manifest.json`: what was run and what was written.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::OutputError;
use crate::output::WrittenFile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub program: String,
    pub version: String,
    pub command: String,
    /// Full TOML config; running it again reproduces the outputs.
    pub config: Option<String>,
    pub seed: Option<u64>,
    /// Wall-clock times in seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub files: Vec<WrittenFile>,
    /// Runs that stopped with an error, as `name: message`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl RunManifest {
    pub fn start(command: &str, config: Option<String>, seed: Option<u64>) -> Self {
        RunManifest {
            program: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            seed,
            started: now(),
            finished: f64::NAN,
            files: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Stamps the end time and writes `manifest.json` into `dir`. Every
    /// listed file must already exist there.
    pub fn finish(mut self, dir: &Path) -> Result<Self, OutputError> {
        self.finished = now();
        for f in &self.files {
            let p = dir.join(&f.name);
            if !p.is_file() {
                return Err(OutputError::Format {
                    path: p,
                    message: "listed in the manifest but missing".into(),
                });
            }
        }
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self).map_err(|source| OutputError::Json {
            path: path.clone(),
            source,
        })?;
        std::fs::write(&path, text + "\n").map_err(|source| OutputError::Io { path, source })?;
        Ok(self)
    }

    pub fn read(path: &Path) -> Result<Self, OutputError> {
        let text = std::fs::read_to_string(path).map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| OutputError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}
