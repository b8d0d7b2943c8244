use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kuiper_cli::{dispatch, keys};

/// Convex integration toolkit for the very weak Monge-Ampere system.
///
/// Every subcommand takes `key=value` settings, optionally on top of a
/// config file of `key = value` lines. `kuiper <command> --keys` lists them.
#[derive(Parser)]
#[command(name = "kuiper", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Settings {
    /// Config file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// List the accepted keys with their defaults and exit.
    #[arg(long)]
    keys: bool,
    /// `key=value` overrides.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Radon-Hurwitz numbers, subspace dimensions and direction counts.
    Tables(Settings),
    /// Search (or load) a primitive frame.
    Frame(Settings),
    /// Certify that a matrix space is invertible.
    Certify(Settings),
    /// Probe the common null cone of a matrix space.
    BaseLocus(Settings),
    /// Decompose a symmetric field file.
    Decompose(Settings),
    /// Run the stage iteration.
    Run(Settings),
    /// Audit the schedule inequalities without fields.
    ScheduleCheck(Settings),
    /// Merge the stage reports of a run directory into series.
    Report(Settings),
    /// Reproduce the acceptance criteria.
    Acceptance(Settings),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, s) = match cli.command {
        Command::Tables(s) => ("tables", s),
        Command::Frame(s) => ("frame", s),
        Command::Certify(s) => ("certify", s),
        Command::BaseLocus(s) => ("base-locus", s),
        Command::Decompose(s) => ("decompose", s),
        Command::Run(s) => ("run", s),
        Command::ScheduleCheck(s) => ("schedule-check", s),
        Command::Report(s) => ("report", s),
        Command::Acceptance(s) => ("acceptance", s),
    };
    if s.keys {
        for k in keys(name).expect("known command") {
            let d = if k.default.is_empty() { "(unset)" } else { k.default };
            println!("{:<22} {:<10} {}", k.name, d, k.help);
        }
        return ExitCode::SUCCESS;
    }
    match dispatch(name, s.config.as_deref(), &s.set) {
        Ok(out) => {
            print!("{}", out.text);
            match out.failure {
                None => ExitCode::SUCCESS,
                Some(e) => {
                    eprintln!("kuiper {name}: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Err(e) => {
            eprintln!("kuiper {name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
