use std::path::Path;

use serde::Serialize;
use svbeam_core::SCHEMA_VERSION;

/// Provenance record written next to every artifact.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub spec_version: String,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value, seed: Option<u64>, outputs: &[&Path]) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters,
            seed,
            spec_version: SCHEMA_VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        }
    }
}

/// `<path>.manifest.json`.
pub fn manifest_path(artifact: &Path) -> std::path::PathBuf {
    let mut name = artifact.as_os_str().to_owned();
    name.push(".manifest.json");
    name.into()
}
