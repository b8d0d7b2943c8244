//! Command surface of the kuiper toolkit: configuration handling, the
//! subcommands and the acceptance reproduction.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod provenance;

use std::path::Path;

pub use config::{Config, Key};
pub use error::{CliError, CliResult};

/// Text for stdout and, when the command found a problem after producing
/// its outputs, the error deciding the exit code.
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub failure: Option<CliError>,
}

impl From<String> for Output {
    fn from(text: String) -> Self {
        Output { text, failure: None }
    }
}

pub const COMMANDS: &[&str] =
    &["tables", "frame", "certify", "base-locus", "decompose", "run", "schedule-check", "report", "acceptance"];

pub const ACCEPTANCE_KEYS: &[Key] = &[config::key("frame_cache", "", "directory of cached frames")];

pub fn keys(command: &str) -> CliResult<&'static [Key]> {
    use commands::*;
    Ok(match command {
        "tables" => algebra::TABLES_KEYS,
        "frame" => algebra::FRAME_KEYS,
        "certify" => algebra::CERTIFY_KEYS,
        "base-locus" => algebra::BASE_LOCUS_KEYS,
        "decompose" => decompose::KEYS,
        "run" => run::KEYS,
        "schedule-check" => schedule::KEYS,
        "report" => report::KEYS,
        "acceptance" => ACCEPTANCE_KEYS,
        other => return Err(CliError::config(format!("unknown command `{other}`"))),
    })
}

/// Resolves the configuration of `command` and runs it.
pub fn dispatch(command: &str, file: Option<&Path>, overrides: &[String]) -> CliResult<Output> {
    use commands::*;
    let cfg = Config::resolve(command, keys(command)?, file, overrides)?;
    match command {
        "tables" => algebra::tables(&cfg).map(Output::from),
        "frame" => algebra::frame(&cfg).map(Output::from),
        "certify" => algebra::certify(&cfg).map(Output::from),
        "base-locus" => algebra::base_locus(&cfg).map(Output::from),
        "decompose" => decompose::execute(&cfg).map(Output::from),
        "run" => run::execute(&cfg),
        "schedule-check" => schedule::execute(&cfg),
        "report" => report::execute(&cfg),
        "acceptance" => run_acceptance(&cfg),
        _ => unreachable!("keys() rejects unknown commands"),
    }
}

fn run_acceptance(cfg: &Config) -> CliResult<Output> {
    let results = acceptance::all(cfg.path("frame_cache").as_deref())?;
    let mut text = String::new();
    for c in &results {
        text.push_str(&format!("{c}\n"));
    }
    let failed: Vec<String> = results.iter().filter(|c| !c.pass).map(|c| c.id.to_string()).collect();
    let failure = (!failed.is_empty()).then(|| CliError::Check(format!("criteria failing: {}", failed.join(", "))));
    Ok(Output { text, failure })
}
