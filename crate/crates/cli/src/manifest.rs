//! Run manifests: enough provenance to re-run any command and verify its
//! outputs byte for byte.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Full argument vector after the program name.
    pub argv: Vec<String>,
    /// Hash over argv plus the bytes of any referenced config file.
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_ms: u64,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| {
        CliError::usage_at(format!("cannot hash output: {e}"), path.display().to_string())
    })?;
    Ok(sha256_hex(&bytes))
}

/// Hash of the effective configuration: the argument vector joined with NUL
/// separators, followed by the raw bytes of the config file if one is used.
pub fn config_hash(argv: &[String], config_file: Option<&Path>) -> CliResult<String> {
    let mut h = Sha256::new();
    for a in argv {
        h.update(a.as_bytes());
        h.update([0u8]);
    }
    if let Some(path) = config_file {
        let bytes = std::fs::read(path).map_err(|e| {
            CliError::usage_at(format!("cannot read config: {e}"), path.display().to_string())
        })?;
        h.update(&bytes);
    }
    Ok(format!("{:x}", h.finalize()))
}

/// The manifest sits next to the primary output as `<out>.manifest.json`.
pub fn manifest_path(primary_out: &Path) -> PathBuf {
    let mut s = primary_out.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Hash the produced outputs and write the manifest beside the primary one.
pub fn write_manifest(
    argv: &[String],
    config_file: Option<&Path>,
    seed: u64,
    started: Instant,
    primary_out: &Path,
    outputs: &[PathBuf],
) -> CliResult<()> {
    let records = outputs
        .iter()
        .map(|p| {
            Ok(OutputRecord { path: p.display().to_string(), sha256: sha256_file(p)? })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let manifest = RunManifest {
        argv: argv.to_vec(),
        config_sha256: config_hash(argv, config_file)?,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: started.elapsed().as_millis() as u64,
        outputs: records,
    };
    let path = manifest_path(primary_out);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(|e| {
        CliError::usage_at(format!("cannot write manifest: {e}"), path.display().to_string())
    })
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::usage_at(format!("cannot read manifest: {e}"), path.display().to_string())
    })?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::usage_at(format!("malformed manifest: {e}"), path.display().to_string())
    })
}
