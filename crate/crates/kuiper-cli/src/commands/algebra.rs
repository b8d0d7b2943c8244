use std::fmt::Write as _;
use std::path::Path;

use kuiper::algebra::{
    base_locus_probe, certify_invertible, choose_l_with, load_or_find_frame, BaseLocusReport, CertifyOptions,
    FrameSearch, MatrixSpace, PrimitiveFrame,
};
use kuiper::scheme::alpha_threshold;
use kuiper::{rho, rho_half, xi_index};
use nalgebra::DMatrix;

use crate::config::{key, Config, Key};
use crate::error::{CliError, CliResult};

pub const TABLES_KEYS: &[Key] = &[
    key("n_max", "16", "largest dimension listed (2..=64)"),
    key("format", "text", "text or csv"),
    key("frame_n_max", "6", "search frames (for gram_condition) up to this n"),
    key("frame_cache", "", "directory of cached frames"),
    key("seed", "0", "seed of the certification and frame searches"),
];

pub const FRAME_KEYS: &[Key] = &[
    key("n", "2", "dimension"),
    key("space", "auto", "auto, w_minus, w_zero or odd"),
    key("restarts", "400", "random starting points"),
    key("tolerance", "1e-18", "acceptance threshold of the cone residual"),
    key("max_condition", "1e6", "largest accepted Gram condition number"),
    key("seed", "0", "search seed"),
    key("frame_cache", "", "directory of cached frames"),
    key("out", "", "write the frame to this file"),
];

pub const CERTIFY_KEYS: &[Key] = &[
    key("n", "2", "dimension"),
    key("space", "auto", "auto, w_minus, w_zero or odd"),
    key("density", "50", "sphere samples per coordinate direction"),
    key("max_samples", "20000", "cap on the number of samples"),
    key("polish", "8", "best samples refined by descent"),
    key("seed", "0", "sampling seed"),
];

pub const BASE_LOCUS_KEYS: &[Key] = &[
    key("space", "w_zero", "w_zero, w_minus, odd or matrix"),
    key("n", "2", "dimension"),
    key("matrix", "", "rows separated by `;`, entries by `,` (space = matrix)"),
    key("restarts", "200", "random starting points"),
    key("seed", "0", "probe seed"),
];

/// Matrix space selected by `space`, with `auto` meaning the space the
/// scheme uses.
pub fn build_space(kind: &str, n: usize, certify: &CertifyOptions) -> CliResult<MatrixSpace> {
    Ok(match kind {
        "auto" => choose_l_with(n, certify)?,
        "w_minus" => MatrixSpace::w_minus(n)?,
        "w_zero" => MatrixSpace::w_zero(n)?,
        "odd" => MatrixSpace::odd(n)?,
        other => return Err(CliError::config(format!("unknown space `{other}`"))),
    })
}

fn certify_options(cfg: &Config) -> CliResult<CertifyOptions> {
    let d = CertifyOptions::default();
    Ok(CertifyOptions {
        density: cfg.opt("density")?.unwrap_or(d.density),
        max_samples: cfg.opt("max_samples")?.unwrap_or(d.max_samples),
        polish: cfg.opt("polish")?.unwrap_or(d.polish),
        seed: cfg.opt("seed")?.unwrap_or(d.seed),
    })
}

fn frame_search(cfg: &Config) -> CliResult<FrameSearch> {
    let d = FrameSearch::default();
    Ok(FrameSearch {
        restarts: cfg.opt("restarts")?.unwrap_or(d.restarts),
        tolerance: cfg.opt("tolerance")?.unwrap_or(d.tolerance),
        max_condition: cfg.opt("max_condition")?.unwrap_or(d.max_condition),
        seed: cfg.opt("seed")?.unwrap_or(d.seed),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub n: usize,
    pub rho: usize,
    pub rho_half: usize,
    pub dim_l: usize,
    pub xi_n: usize,
    pub margin: f64,
    /// `None` when no frame was searched or none exists.
    pub gram_condition: Option<f64>,
    pub alpha_threshold: f64,
}

/// One row per `n = 2..=n_max`.
pub fn table(n_max: usize, frame_n_max: usize, frame_cache: Option<&Path>, seed: u64) -> CliResult<Vec<TableRow>> {
    if !(2..=64).contains(&n_max) {
        return Err(CliError::config(format!("n_max must lie in 2..=64, got {n_max}")));
    }
    let certify = CertifyOptions { seed, ..CertifyOptions::default() };
    let search = FrameSearch { seed, ..FrameSearch::default() };
    let mut rows = Vec::with_capacity(n_max - 1);
    for n in 2..=n_max {
        let space = choose_l_with(n, &certify)?;
        let gram_condition = if n <= frame_n_max {
            match load_or_find_frame(&space, frame_cache, &search) {
                Ok(f) => Some(f.gram_condition),
                Err(e) if e.is_numerical() => {
                    log::info!("n={n}: {e}");
                    None
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            None
        };
        rows.push(TableRow {
            n,
            rho: rho(n)?,
            rho_half: rho_half(n)?,
            dim_l: space.dim(),
            xi_n: xi_index(n)?,
            margin: space.margin.unwrap_or(f64::NAN),
            gram_condition,
            alpha_threshold: alpha_threshold(n)?,
        });
    }
    Ok(rows)
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))
}

pub fn tables_csv(rows: &[TableRow]) -> String {
    let mut s = String::from("n,rho_half,dim_L,xi_n,margin,gram_condition\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.n, r.rho_half, r.dim_l, r.xi_n, r.margin, opt_num(r.gram_condition));
    }
    s
}

pub fn tables_text(rows: &[TableRow]) -> String {
    let mut s = format!(
        "{:>3} {:>4} {:>8} {:>6} {:>5} {:>11} {:>14} {:>16}\n",
        "n", "rho", "rho_half", "dim_L", "xi_n", "margin", "gram_condition", "alpha_threshold"
    );
    for r in rows {
        let gram = r.gram_condition.map_or_else(|| "NA".to_string(), |g| format!("{g:.4e}"));
        let _ = writeln!(
            s,
            "{:>3} {:>4} {:>8} {:>6} {:>5} {:>11.4e} {:>14} {:>16.10}",
            r.n, r.rho, r.rho_half, r.dim_l, r.xi_n, r.margin, gram, r.alpha_threshold
        );
    }
    s
}

pub fn tables(cfg: &Config) -> CliResult<String> {
    let rows = table(cfg.get("n_max")?, cfg.get("frame_n_max")?, cfg.path("frame_cache").as_deref(), cfg.get("seed")?)?;
    match cfg.raw("format") {
        "text" => Ok(tables_text(&rows)),
        "csv" => Ok(tables_csv(&rows)),
        other => Err(CliError::config(format!("unknown format `{other}`"))),
    }
}

pub fn frame_summary(f: &PrimitiveFrame) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n = {}", f.n);
    let _ = writeln!(s, "case_tag = {}", f.tag);
    let _ = writeln!(s, "xi_n = {}", f.len());
    let _ = writeln!(s, "gram_condition = {:e}", f.gram_condition);
    let _ = writeln!(s, "pairing_residual = {:e}", f.pairing_residual);
    for (i, v) in f.xi.iter().enumerate() {
        let row: Vec<String> = v.iter().map(|x| format!("{x:>10.6}")).collect();
        let _ = writeln!(s, "xi_{:<3} {}", i + 1, row.join(" "));
    }
    s
}

pub fn frame(cfg: &Config) -> CliResult<String> {
    let n: usize = cfg.get("n")?;
    let space = build_space(cfg.raw("space"), n, &CertifyOptions::default())?;
    let f = load_or_find_frame(&space, cfg.path("frame_cache").as_deref(), &frame_search(cfg)?)?;
    if let Some(out) = cfg.path("out") {
        f.write(&out, cfg.get("tolerance")?)?;
        crate::provenance::stamp_text(&out, &cfg.hash())?;
    }
    Ok(frame_summary(&f))
}

pub fn certify(cfg: &Config) -> CliResult<String> {
    let n: usize = cfg.get("n")?;
    let opts = certify_options(cfg)?;
    let space = build_space(cfg.raw("space"), n, &opts)?;
    let margin = certify_invertible(&space, &opts)?;
    let pass = margin > 1e-6;
    let mut s = String::new();
    let _ = writeln!(s, "n = {n}");
    let _ = writeln!(s, "case_tag = {}", space.tag);
    let _ = writeln!(s, "dim_L = {}", space.dim());
    let _ = writeln!(s, "invertibility_margin = {margin:e}");
    let _ = writeln!(s, "certified = {pass}");
    if !pass {
        return Err(kuiper::Error::Certification { n, margin, tol: 1e-6 }.into());
    }
    Ok(s)
}

/// `"1,0;0,-1"` as a matrix.
pub fn parse_matrix(text: &str) -> CliResult<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|r| r.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::config(format!("matrix `{text}`: {e}")))?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::config(format!("matrix `{text}` is not square")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn probe_space(space: &MatrixSpace, restarts: usize, seed: u64) -> CliResult<BaseLocusReport> {
    Ok(base_locus_probe(&space.orthonormal_doubled()?, restarts, seed)?)
}

pub fn base_locus(cfg: &Config) -> CliResult<String> {
    let restarts: usize = cfg.get("restarts")?;
    let seed: u64 = cfg.get("seed")?;
    let (label, report) = if cfg.raw("space") == "matrix" {
        let m = parse_matrix(cfg.raw("matrix"))?;
        ("matrix".to_string(), base_locus_probe(&[m], restarts, seed)?)
    } else {
        let n: usize = cfg.get("n")?;
        let space = build_space(cfg.raw("space"), n, &CertifyOptions::default())?;
        (format!("{}_{n}", space.tag), probe_space(&space, restarts, seed)?)
    };
    let mut s = String::new();
    let _ = writeln!(s, "space = {label}");
    let _ = writeln!(s, "restarts = {}", report.restarts);
    let _ = writeln!(s, "objective_min = {:e}", report.min_objective);
    let _ = writeln!(s, "verdict = {}", report.verdict.as_str());
    let x: Vec<String> = report.minimizer.iter().map(|v| format!("{v:.6}")).collect();
    let _ = writeln!(s, "minimizer = {}", x.join(" "));
    let _ = writeln!(s, "note = numerical evidence only");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_table() {
        let rows = table(8, 3, None, 0).unwrap();
        assert_eq!(rows.len(), 7);
        let r8 = &rows[6];
        assert_eq!((r8.rho_half, r8.xi_n), (4, 32));
        assert_eq!(rows[5].xi_n, 27);
        assert_eq!(rows[0].alpha_threshold, 0.2);
        assert_eq!(rows[0].gram_condition, Some(1.0));
        assert_eq!(rows[2].gram_condition, None);
        let csv = tables_csv(&rows);
        assert!(csv.starts_with("n,rho_half,dim_L,xi_n,margin,gram_condition\n"));
        assert!(csv.contains("\n8,4,4,32,"));
    }

    #[test]
    fn table_range_checked() {
        assert!(table(1, 0, None, 0).is_err());
        assert!(table(65, 0, None, 0).is_err());
    }

    #[test]
    fn matrices_parse() {
        let m = parse_matrix("1, 0; 0, -1").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert!(parse_matrix("1,0;0").is_err());
        assert!(parse_matrix("a").is_err());
    }
}
