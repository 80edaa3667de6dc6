use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

pub const FILE_NAME: &str = "manifest.json";

/// Record of one run: enough to reproduce every output byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, without `--out`.
    pub argv: Vec<String>,
    pub network: String,
    /// SHA-256 of the canonical network text.
    pub network_hash: String,
    pub parameters: serde_json::Value,
    pub version: String,
    pub outputs: Vec<String>,
}

pub fn network_hash(canonical_text: &str) -> String {
    let digest = Sha256::digest(canonical_text.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// Drops `--out DIR` and `--out=DIR` so that a manifest does not pin its
/// own location.
pub fn strip_out(argv: &[String]) -> Vec<String> {
    let mut kept = Vec::with_capacity(argv.len());
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            kept.push(a.clone());
        }
    }
    kept
}

pub fn write(dir: &Path, m: &RunManifest) -> CliResult<()> {
    let text = serde_json::to_string_pretty(m).map_err(|e| CliError::Numeric(e.to_string()))?;
    std::fs::write(dir.join(FILE_NAME), text + "\n")?;
    Ok(())
}

pub fn read(path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("malformed manifest {}: {e}", path.display())))
}
