//! Output files: atomic writes, content hashes and the run manifest.

use anyhow::{Context, Result};
use onebit_core::dataset::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 over a git-style blob header and the content.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex(&h.finalize())
}

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Collects written files so the manifest can list them.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<OutputFile>,
}

impl Outputs {
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(OutputFile {
            path: path.to_path_buf(),
            sha256: content_hash(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(path, text.as_bytes())
    }
}

/// Written next to every artifact. `inputs` holds everything needed to
/// repeat the run; `input_hash` identifies it.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub argv: Vec<String>,
    pub timestamp_unix: u64,
    pub input_hash: String,
    pub inputs: &'a T,
    pub outputs: &'a [OutputFile],
}

pub fn write_manifest<T: Serialize>(dir: &Path, command: &str, inputs: &T, outputs: &mut Outputs) -> Result<()> {
    let canonical = serde_json::to_vec(inputs)?;
    let files = std::mem::take(&mut outputs.files);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        argv: std::env::args().collect(),
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        input_hash: content_hash(&canonical),
        inputs,
        outputs: &files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(&dir.join("run_manifest.json"), text.as_bytes())?;
    outputs.files = files;
    Ok(())
}
