use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Categorize, Category, CliResult};
use traitsim::io::{read_file, write_file, SCHEMA_VERSION};

pub const MANIFEST_FILE: &str = "manifest.json";

/// What went into a run and what came out. No timestamps, so reruns of the
/// same inputs produce the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// Command-specific settings, e.g. the resolved simulation config.
    pub config: serde_json::Value,
    /// Input path -> sha256 hex.
    pub inputs: BTreeMap<String, String>,
    /// Output files, relative to the artifact directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed: None,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.insert(label.to_string(), hex::encode(Sha256::digest(bytes)));
    }

    pub fn write(&mut self, dir: &Path) -> CliResult<PathBuf> {
        self.outputs.sort();
        self.outputs.dedup();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        write_file(&path, &text).category(Category::Runtime)?;
        Ok(path)
    }
}

/// Read a manifest if present and refuse other schema versions.
pub fn check_schema(dir: &Path) -> CliResult<Option<RunManifest>> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = read_file(&path).category(Category::Input)?;
    let m: RunManifest = serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
        .category(Category::Schema)?;
    if m.schema_version != SCHEMA_VERSION {
        return crate::error::fail(
            Category::Schema,
            format!("{}: schema_version {} but this build reads {SCHEMA_VERSION}", path.display(), m.schema_version),
        );
    }
    Ok(Some(m))
}
