//! Run directories and the manifests written into them.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Configuration after merging defaults, config file and flags.
    pub config: Value,
    pub seeds: Vec<u64>,
    pub version: String,
    pub timestamp: String,
    /// Input file path to SHA-256 digest.
    pub inputs: BTreeMap<String, String>,
    /// Output file name (relative to the run directory) to SHA-256 digest.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_of: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("malformed manifest {}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> io::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Output directory of one run. Files are written one at a time by the
/// coordinating thread and remembered for the manifest.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    outputs: Vec<String>,
    inputs: BTreeMap<String, String>,
}

impl RunDir {
    /// Creates `<root>/<command>-<timestamp>-<digest8>`, adding a numeric
    /// suffix if two runs collide within the same millisecond.
    pub fn create(root: &Path, command: &str, timestamp: &str, config: &Value) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        let key = format!("{command}\n{config}");
        let short = &sha256_hex(key.as_bytes())[..8];
        let stamp: String = timestamp.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        let base = format!("{command}-{stamp}-{short}");
        let mut attempt = 1;
        loop {
            let name = if attempt == 1 { base.clone() } else { format!("{base}-{attempt}") };
            let path = root.join(name);
            match fs::create_dir(&path) {
                Ok(()) => return Ok(RunDir { path, outputs: Vec::new(), inputs: BTreeMap::new() }),
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => attempt += 1,
                Err(e) => return Err(e),
            }
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Path for a new output file, recorded for the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|n| n == name) {
            self.outputs.push(name.to_string());
        }
        self.path.join(name)
    }

    pub fn record_input(&mut self, path: &Path) -> io::Result<()> {
        let digest = file_digest(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn output_digests(&self) -> io::Result<BTreeMap<String, String>> {
        self.outputs.iter().map(|n| Ok((n.clone(), file_digest(&self.path.join(n))?))).collect()
    }

    pub fn inputs(&self) -> &BTreeMap<String, String> {
        &self.inputs
    }
}
