//! Tagging outputs with the hash of the configuration that produced them.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::sha256_file;
use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.txt";

pub fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Prepends `# config_hash = <hash>` to a text file.
pub fn stamp_text(path: &Path, hash: &str) -> CliResult<()> {
    let body = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    write(path, &format!("# config_hash = {hash}\n{body}"))
}

/// Lists `files` (relative to `dir`) with their sha256 under the config
/// hash. Binary outputs carry their provenance through this file.
pub fn write_manifest(dir: &Path, hash: &str, files: &[String]) -> CliResult<()> {
    let mut s = format!("# config_hash = {hash}\n");
    for f in files {
        let _ = writeln!(s, "{}  {f}", sha256_file(&dir.join(f))?);
    }
    write(&dir.join(MANIFEST), &s)
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
