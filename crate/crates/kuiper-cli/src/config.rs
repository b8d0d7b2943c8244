//! Line-oriented `key = value` configuration.
//!
//! Every subcommand has a fixed table of keys. Values come from the table's
//! defaults, then an optional config file, then `key=value` arguments on the
//! command line; later sources win. Unknown keys are rejected. The resolved
//! configuration is hashed (sha256 over the canonical rendering, the output
//! location excluded) and the hash is written into every output file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// One accepted key. An empty default means "unset".
#[derive(Clone, Copy, Debug)]
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

/// Keys that locate outputs and do not enter the hash.
const UNHASHED: &[&str] = &["out"];

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub command: String,
    values: BTreeMap<String, String>,
}

/// Splits `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_lines(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`, got `{}`", i + 1, raw.trim())))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::config(format!("line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl Config {
    /// Defaults, then the file, then the overrides.
    pub fn resolve(command: &str, keys: &[Key], file: Option<&Path>, overrides: &[String]) -> CliResult<Config> {
        let mut values: BTreeMap<String, String> =
            keys.iter().map(|k| (k.name.to_string(), k.default.to_string())).collect();
        let known = |k: &str| keys.iter().any(|key| key.name == k);
        let mut set = |k: String, v: String, origin: &str| -> CliResult<()> {
            if !known(&k) {
                let names: Vec<&str> = keys.iter().map(|k| k.name).collect();
                return Err(CliError::config(format!(
                    "unknown key `{k}` in {origin} for `{command}` (accepted: {})",
                    names.join(", ")
                )));
            }
            values.insert(k, v);
            Ok(())
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
            let mut seen = std::collections::BTreeSet::new();
            for (k, v) in parse_lines(&text)? {
                if !seen.insert(k.clone()) {
                    return Err(CliError::config(format!("key `{k}` given twice in {}", path.display())));
                }
                set(k, v, &path.display().to_string())?;
            }
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("override `{o}` is not of the form key=value")))?;
            set(k.trim().to_string(), v.trim().to_string(), "command line")?;
        }
        Ok(Config { command: command.to_string(), values })
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn is_set(&self, key: &str) -> bool {
        !self.raw(key).is_empty()
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.opt(key)?.ok_or_else(|| CliError::config(format!("`{key}` must be set")))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(None);
        }
        raw.parse().map(Some).map_err(|e| CliError::config(format!("`{key} = {raw}`: {e}")))
    }

    pub fn flag(&self, key: &str) -> CliResult<bool> {
        match self.raw(key) {
            "" | "false" | "no" | "0" => Ok(false),
            "true" | "yes" | "1" => Ok(true),
            other => Err(CliError::config(format!("`{key} = {other}` is not a boolean"))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.is_set(key).then(|| PathBuf::from(self.raw(key)))
    }

    /// `key = value` lines in key order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("command = {}\n", self.command));
        for (k, v) in self.values.iter().filter(|(k, _)| !UNHASHED.contains(&k.as_str())) {
            h.update(format!("{k} = {v}\n"));
        }
        hex(&h.finalize())
    }

    /// The rendering preceded by the command and the hash, as written to
    /// `config.txt`.
    pub fn provenance(&self) -> String {
        format!("# command = {}\n# config_hash = {}\n{}", self.command, self.hash(), self.render())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}
