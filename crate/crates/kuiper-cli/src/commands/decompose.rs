use std::fmt::Write as _;
use std::path::Path;

use kuiper::elliptic::SolverKind;
use kuiper::grid::{read_field, write_field};
use kuiper::{DecomposeOptions, Decomposer, Decomposition, GridField, Rank};

use crate::config::{key, Config, Key};
use crate::error::{CliError, CliResult};
use crate::provenance;

pub const KEYS: &[Key] = &[
    key("input", "", "symmetric field file"),
    key("n", "", "expected dimension of the field"),
    key("out", "decomposition", "output directory"),
    key("solver", "auto", "auto, direct or cg"),
    key("inflation", "1.05", "safety factor on the coefficient shift"),
    key("pad_divisor", "4", "padding of the elimination box, in cells / pad_divisor"),
    key("frame_cache", "", "directory of cached frames"),
];

pub fn solver_kind(s: &str) -> CliResult<SolverKind> {
    match s {
        "auto" => Ok(SolverKind::Auto),
        "direct" => Ok(SolverKind::Direct),
        "cg" => Ok(SolverKind::ConjugateGradient),
        other => Err(CliError::config(format!("unknown solver `{other}`"))),
    }
}

pub fn decompose_options(cfg: &Config) -> CliResult<DecomposeOptions> {
    Ok(DecomposeOptions {
        solver: solver_kind(cfg.raw("solver"))?,
        pad_divisor: cfg.get("pad_divisor")?,
        inflation: cfg.get("inflation")?,
        frame_cache: cfg.path("frame_cache"),
    })
}

/// Plain `key: value` report of a decomposition.
pub fn report_text(d: &GridField, dec: &Decomposition, hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config_hash: {hash}");
    let _ = writeln!(s, "n: {}", d.grid.dim());
    let _ = writeln!(s, "grid_points: {}", d.grid.shape()[0]);
    let _ = writeln!(s, "xi_n: {}", dec.xi.len());
    let _ = writeln!(s, "solver: {}", dec.solve.method);
    let _ = writeln!(s, "solver_iterations: {}", dec.solve.iterations);
    let _ = writeln!(s, "solver_relative_residual: {:e}", dec.solve.relative_residual);
    let _ = writeln!(s, "projection_residual: {:e}", dec.projection_residual);
    let _ = writeln!(s, "reconstruction_residual: {:e}", dec.reconstruction_residual);
    let _ = writeln!(s, "sigma0: {:e}", dec.sigma0);
    let _ = writeln!(s, "min_a_sq: {:e}", dec.min_coefficient());
    let _ = writeln!(s, "input_c0: {:e}", d.sup_norm());
    let _ = writeln!(s, "m1_ratio: {:e}", dec.m1_ratio);
    s
}

pub fn execute(cfg: &Config) -> CliResult<String> {
    let input = cfg.path("input").ok_or_else(|| CliError::config("`input` must be set"))?;
    let d = read_field(&input)?;
    if d.rank != Rank::Sym {
        return Err(CliError::config(format!("{} does not hold a symmetric field", input.display())));
    }
    if let Some(n) = cfg.opt::<usize>("n")? {
        if n != d.grid.dim() {
            return Err(CliError::config(format!("n = {n} but the field is {}-dimensional", d.grid.dim())));
        }
    }
    let dec = Decomposer::new(&d.grid, &decompose_options(cfg)?)?;
    let res = dec.decompose(&d)?;
    let out = cfg.path("out").ok_or_else(|| CliError::config("`out` must be set"))?;
    write_outputs(&out, cfg, &d, &dec, &res)?;
    Ok(report_text(&d, &res, &cfg.hash()))
}

fn write_outputs(out: &Path, cfg: &Config, d: &GridField, dec: &Decomposer, res: &Decomposition) -> CliResult<()> {
    provenance::create_dir(out)?;
    let hash = cfg.hash();
    provenance::write(&out.join("config.txt"), &cfg.provenance())?;
    write_field(&out.join("phi.cifd"), &res.phi)?;
    write_field(&out.join("a_sq.cifd"), &res.a_sq)?;
    let frame = out.join("frame.txt");
    dec.frame.write(&frame, 1e-18)?;
    provenance::stamp_text(&frame, &hash)?;
    provenance::write(&out.join("report.txt"), &report_text(d, res, &hash))?;
    provenance::write_manifest(out, &hash, &["phi.cifd".into(), "a_sq.cifd".into()])
}
