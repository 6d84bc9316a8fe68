//! Atomic file output with rollback, and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Tracks everything a run writes so a failed run leaves nothing behind.
///
/// Each file goes to a temporary sibling first and is renamed into place,
/// so readers never observe a half-written file.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
    /// Manifest key (path relative to the manifest) -> SHA-256.
    digests: BTreeMap<String, String>,
    root: Option<PathBuf>,
}

impl Outputs {
    /// Manifest keys are taken relative to `root`, or to each file's own
    /// directory when there is none.
    pub fn new(root: Option<&Path>) -> Self {
        Outputs {
            root: root.map(Path::to_path_buf),
            ..Default::default()
        }
    }

    pub fn ensure_dir(&mut self, dir: &Path) -> Result<(), CliError> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        for d in missing.into_iter().rev() {
            fs::create_dir(&d).map_err(|e| CliError::io(&d, e))?;
            self.dirs.push(d);
        }
        Ok(())
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        let parent = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        self.ensure_dir(&parent)?;
        let mut tmp = tempfile::Builder::new()
            .prefix(".partlex-")
            .tempfile_in(&parent)
            .map_err(|e| CliError::io(&parent, e))?;
        tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
        tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
        self.files.push(path.to_path_buf());
        let key = match &self.root {
            Some(root) => path.strip_prefix(root).unwrap_or(path),
            None => Path::new(path.file_name().unwrap_or(path.as_os_str())),
        };
        self.digests
            .insert(key.to_string_lossy().replace('\\', "/"), sha256_hex(bytes));
        Ok(())
    }

    /// Writes the manifest for everything written so far.
    pub fn write_manifest<C: Serialize>(
        &mut self,
        path: &Path,
        command: &str,
        config: &C,
        inputs: &BTreeMap<String, String>,
    ) -> Result<(), CliError> {
        let manifest = Manifest {
            tool: "partlex",
            version: env!("CARGO_PKG_VERSION"),
            spec_version: partlex::stimgen::SPEC_VERSION,
            command,
            config,
            inputs,
            outputs: &self.digests,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        self.write(path, text.as_bytes())
    }

    /// Removes every file and directory this run created, newest first.
    pub fn rollback(&mut self) {
        for f in self.files.drain(..).rev() {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.drain(..).rev() {
            let _ = fs::remove_dir(d);
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    spec_version: &'static str,
    command: &'a str,
    config: &'a C,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
}

/// The manifest path used for a single-file output: `out.manifest.json`.
pub fn sidecar_manifest(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
