//! Output directory handling and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub output_dir: PathBuf,
    pub timestamp: String,
    pub artifact_paths: Vec<PathBuf>,
}

/// Tracks files written into one output directory.
pub struct OutputDir {
    root: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl OutputDir {
    /// Creates `root` if missing; refuses a nonempty directory unless `force`.
    pub fn prepare(root: &Path, force: bool) -> Result<Self, CliError> {
        if root.exists() {
            if !root.is_dir() {
                return Err(CliError::Usage(format!(
                    "output path {} is not a directory",
                    root.display()
                )));
            }
            let nonempty = fs::read_dir(root)
                .map_err(|e| CliError::io("output", e))?
                .next()
                .is_some();
            if nonempty && !force {
                return Err(CliError::Usage(format!(
                    "output directory {} is not empty; pass --force to write into it",
                    root.display()
                )));
            }
        } else {
            fs::create_dir_all(root).map_err(|e| CliError::io("output", e))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    /// Path for a new artifact, recorded for the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        let p = self.root.join(name);
        self.artifacts.push(p.clone());
        p
    }

    pub fn write_manifest(
        self,
        command: &str,
        parameters: BTreeMap<String, Value>,
    ) -> Result<PathBuf, CliError> {
        let path = self.root.join("manifest.json");
        let manifest = RunManifest {
            command: command.to_string(),
            parameters,
            output_dir: self.root.clone(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            artifact_paths: self.artifacts,
        };
        dfnls_core::io::write_json(&path, &manifest).map_err(|e| CliError::stage("output", e))?;
        Ok(path)
    }
}
