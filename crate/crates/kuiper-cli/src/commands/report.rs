use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kuiper::scheme::ScheduleParams;

use crate::config::{key, Config, Key};
use crate::error::{CliError, CliResult};
use crate::{provenance, Output};

use super::run::STAGE_COLUMNS;

pub const KEYS: &[Key] = &[
    key("run_dir", "", "directory written by `run`"),
    key("out", "", "where the series go (default: run_dir)"),
];

/// One parsed `stage_*.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct StageFile {
    pub path: PathBuf,
    pub header: BTreeMap<String, String>,
    pub q: usize,
    pub delta_q: f64,
    pub lambda_q: f64,
    pub mu0: f64,
    pub l: f64,
    pub d_norm: f64,
    pub bound: f64,
    pub pass: bool,
    pub v_c1: f64,
    pub v_c2: f64,
    pub holder: f64,
}

pub fn parse_stage_file(path: &Path) -> Result<StageFile, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut header = BTreeMap::new();
    let mut body = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        if let Some(c) = line.strip_prefix('#') {
            let (k, v) = c.split_once('=').ok_or_else(|| format!("bad header line `{line}`"))?;
            header.insert(k.trim().to_string(), v.trim().to_string());
        } else {
            body.push(line);
        }
    }
    if body.first() != Some(&STAGE_COLUMNS) {
        return Err("missing or unexpected column header".into());
    }
    if body.len() != 2 {
        return Err(format!("expected one data row, found {}", body.len().saturating_sub(1)));
    }
    let f: Vec<&str> = body[1].split(',').collect();
    if f.len() != 11 {
        return Err(format!("expected 11 columns, found {}", f.len()));
    }
    let num = |i: usize| f[i].parse::<f64>().map_err(|e| format!("column {}: {e}", i + 1));
    Ok(StageFile {
        path: path.to_path_buf(),
        header,
        q: f[0].parse().map_err(|e| format!("column q: {e}"))?,
        delta_q: num(1)?,
        lambda_q: num(2)?,
        mu0: num(3)?,
        l: num(4)?,
        d_norm: num(5)?,
        bound: num(6)?,
        pass: f[7].parse().map_err(|e| format!("column pass: {e}"))?,
        v_c1: num(8)?,
        v_c2: num(9)?,
        holder: num(10)?,
    })
}

fn schedule_from_header(h: &BTreeMap<String, String>) -> Result<ScheduleParams, String> {
    let get = |k: &str| -> Result<f64, String> {
        h.get(k).ok_or_else(|| format!("header lacks `{k}`"))?.parse::<f64>().map_err(|e| format!("header `{k}`: {e}"))
    };
    Ok(ScheduleParams {
        n: get("n")? as usize,
        xi: get("xi_n")? as usize,
        log_a: get("log_a")?,
        b: get("b")?,
        c: get("c")?,
        k: get("K")?,
        c_star: get("C_star")?,
        script_c: get("script_C")?,
        alpha: get("alpha")?,
    })
}

/// Stage files of a run directory sorted by `q`, or the list of problems.
pub fn load_run(dir: &Path) -> Result<Vec<StageFile>, Vec<String>> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) => return Err(vec![format!("{}: {e}", dir.display())]),
    };
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("stage_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(vec![format!("{}: no stage_*.csv reports", dir.display())]);
    }
    let mut errors = Vec::new();
    let mut files = Vec::new();
    for p in paths {
        match parse_stage_file(&p) {
            Ok(f) => files.push(f),
            Err(e) => errors.push(format!("{}: {e}", p.display())),
        }
    }
    files.sort_by_key(|f| f.q);
    for (i, f) in files.iter().enumerate() {
        let expected = format!("stage_{:03}.csv", f.q);
        if f.path.file_name().and_then(|n| n.to_str()) != Some(expected.as_str()) {
            errors.push(format!("{}: holds q = {}", f.path.display(), f.q));
        }
        if errors.is_empty() && f.q != i {
            errors.push(format!("missing report for q = {i}"));
        }
    }
    if let Some(first) = files.first() {
        for f in &files[1..] {
            if f.header.get("config_hash") != first.header.get("config_hash") {
                errors.push(format!("{}: config_hash differs from {}", f.path.display(), first.path.display()));
            }
        }
    }
    if errors.is_empty() {
        Ok(files)
    } else {
        Err(errors)
    }
}

/// Rows whose `delta_q` or `lambda_q` differ from the recomputed schedule.
pub fn recomputation_mismatches(files: &[StageFile]) -> Result<Vec<String>, String> {
    let Some(first) = files.first() else { return Ok(Vec::new()) };
    let p = schedule_from_header(&first.header)?;
    Ok(files
        .iter()
        .filter(|f| f.delta_q != p.delta(f.q) || f.lambda_q != p.lambda(f.q) || f.bound != p.delta(f.q + 1))
        .map(|f| format!("q = {}: stored delta_q = {} but a^(-b^q) = {}", f.q, f.delta_q, p.delta(f.q)))
        .collect())
}

pub struct Series {
    pub deficit: String,
    pub c2: String,
    pub holder: String,
}

pub fn series(files: &[StageFile], hash: &str) -> Series {
    let head = format!("# config_hash = {hash}\n");
    let mut deficit = format!("{head}q,D_norm,bound,ratio,pass\n");
    let mut c2 = format!("{head}q,V_c2,growth\n");
    let mut holder = format!("{head}q,holder_seminorm\n");
    for (i, f) in files.iter().enumerate() {
        let _ = writeln!(deficit, "{},{},{},{},{}", f.q, f.d_norm, f.bound, f.d_norm / f.bound, f.pass);
        let growth = if i == 0 { String::new() } else { (f.v_c2 / files[i - 1].v_c2).to_string() };
        let _ = writeln!(c2, "{},{},{growth}", f.q, f.v_c2);
        let _ = writeln!(holder, "{},{}", f.q, f.holder);
    }
    Series { deficit, c2, holder }
}

pub fn execute(cfg: &Config) -> CliResult<Output> {
    let dir = cfg.path("run_dir").ok_or_else(|| CliError::config("`run_dir` must be set"))?;
    let files = load_run(&dir).map_err(|errs| CliError::config(format!("unusable run directory:\n  {}", errs.join("\n  "))))?;
    let hash = files[0].header.get("config_hash").cloned().unwrap_or_default();
    let mismatches = recomputation_mismatches(&files).map_err(CliError::config)?;
    let monotone = files.windows(2).all(|w| w[1].delta_q < w[0].delta_q);
    let out = cfg.path("out").unwrap_or_else(|| dir.clone());
    provenance::create_dir(&out)?;
    let s = series(&files, &hash);
    provenance::write(&out.join("series_deficit.csv"), &s.deficit)?;
    provenance::write(&out.join("series_c2.csv"), &s.c2)?;
    provenance::write(&out.join("series_holder.csv"), &s.holder)?;
    let mut text = format!("# config_hash = {hash}\n");
    let _ = writeln!(text, "states = {}", files.len());
    let _ = writeln!(text, "last_q = {}", files.last().map_or(0, |f| f.q));
    let _ = writeln!(text, "delta_monotone = {monotone}");
    let _ = writeln!(text, "delta_recomputed_exactly = {}", mismatches.is_empty());
    let _ = writeln!(text, "rows_passing = {}", files.iter().filter(|f| f.pass).count());
    for m in &mismatches {
        let _ = writeln!(text, "mismatch = {m}");
    }
    provenance::write(&out.join("report.txt"), &text)?;
    let failure = (!mismatches.is_empty() || !monotone)
        .then(|| CliError::Check("stored schedule columns disagree with the recomputation".into()));
    Ok(Output { text, failure })
}
