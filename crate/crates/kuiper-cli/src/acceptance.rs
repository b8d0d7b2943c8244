//! Reproduction of the ten acceptance criteria.
//!
//! Each criterion returns a [`Criterion`] with its measured values; the
//! `acceptance` subcommand and the `acceptance` test target print one line
//! per criterion. Tolerances are pinned here.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use kuiper::algebra::{base_locus_probe, choose_l, load_or_find_frame, BaseLocusVerdict, FrameSearch, MatrixSpace};
use kuiper::corrugation::{self, dt_gamma1, dt_gamma2, identity_residual};
use kuiper::decompose::Eliminator;
use kuiper::elliptic::SolverKind;
use kuiper::grid::smooth_random_field;
use kuiper::scheme::{make_schedule, run, Overrides, RunOutcome};
use kuiper::{rho, xi_index, DecomposeOptions, Decomposer, Grid, Rank};
use nalgebra::{DMatrix, DVector};

use crate::commands::{run as run_cmd, schedule};
use crate::config::Config;
use crate::error::CliResult;

/// Criteria whose documented outcome is a failure; see the README.
pub const EXPECTED_FAILURES: &[u8] = &[1, 3, 4, 6, 7];

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    /// Every sub-check held and the runtime stayed inside the budget.
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Criterion {
    pub fn expected_pass(&self) -> bool {
        !EXPECTED_FAILURES.contains(&self.id)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {:<24} {:.2}s/{}s  {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

fn finish(id: u8, title: &'static str, budget_s: u64, elapsed: Duration, checks: bool, detail: String) -> Criterion {
    let budget = Duration::from_secs(budget_s);
    Criterion { id, title, pass: checks && elapsed < budget, detail, elapsed, budget }
}

/// Radon-Hurwitz numbers and the direction counts against the published table.
pub fn tables() -> CliResult<Criterion> {
    let t = Instant::now();
    let rho_ok = (1..=8).map(rho).collect::<Result<Vec<_>, _>>()? == [1, 2, 1, 4, 1, 2, 1, 8] && rho(16)? == 9;
    let xi: Vec<usize> = (2..=8).map(xi_index).collect::<Result<_, _>>()?;
    let xi_ok = xi == [2, 5, 8, 14, 19, 27, 32];
    let xi16 = xi_index(16)?;
    let detail = format!("rho ok={rho_ok} xi(2..8)={xi:?} ok={xi_ok} xi_16={xi16} (table lists 112)");
    Ok(finish(1, "tables", 1, t.elapsed(), rho_ok && xi_ok && xi16 == 112, detail))
}

/// `dim L` by case and certified invertibility for `n <= 32`.
pub fn spaces() -> CliResult<Criterion> {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut min_margin = f64::INFINITY;
    for n in 2..=32 {
        let l = choose_l(n)?;
        let expected = if n % 2 == 1 {
            1
        } else if matches!(n, 2 | 4 | 8 | 16) {
            rho(n / 2)?
        } else {
            rho(n / 2)? + 1
        };
        let margin = l.margin.unwrap_or(0.0);
        min_margin = min_margin.min(margin);
        if l.dim() != expected || margin <= 1e-6 {
            bad.push(n);
        }
    }
    let detail = format!("n=2..32 min margin {min_margin:.3e}, mismatches {bad:?}");
    Ok(finish(2, "space construction", 30, t.elapsed(), bad.is_empty(), detail))
}

/// Primitive frames for `n` in {2, 3, 4, 5, 6, 8}.
pub fn frames(cache: Option<&Path>) -> CliResult<Criterion> {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2usize, 3, 4, 5, 6, 8] {
        let space = choose_l(n)?;
        match load_or_find_frame(&space, cache, &FrameSearch::default()) {
            Ok(f) => {
                let good = f.len() == xi_index(n)? && f.pairing_residual <= 1e-9 && f.gram_condition <= 1e6;
                ok &= good;
                parts.push(format!("n={n}:{} res {:.1e} cond {:.1e}", f.len(), f.pairing_residual, f.gram_condition));
            }
            Err(e) if e.is_numerical() => {
                ok = false;
                parts.push(format!("n={n}: {e}"));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(finish(3, "primitive frames", 300, t.elapsed(), ok, parts.join("; ")))
}

/// Residual statistics of the decomposition sweep of one dimension.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub n: usize,
    pub max_projection: f64,
    pub min_coefficient: f64,
    pub ratios: Vec<f64>,
}

impl Sweep {
    pub fn ratio_range(&self) -> (f64, f64) {
        self.ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(*r), hi.max(*r)))
    }

    pub fn pass(&self) -> bool {
        let (lo, hi) = self.ratio_range();
        self.max_projection <= 1e-8 && self.min_coefficient >= 0.0 && lo >= 3.5 && hi <= 4.5
    }
}

/// 20 smooth random fields decomposed on `coarse` and `2 coarse - 1` points.
pub fn decomposition_sweep(n: usize, coarse: usize, fields: u64, cache: Option<&Path>) -> CliResult<Sweep> {
    let opts = DecomposeOptions { frame_cache: cache.map(Path::to_path_buf), ..Default::default() };
    let g1 = Grid::unit(n, coarse)?;
    let g2 = Grid::unit(n, 2 * coarse - 1)?;
    let (d1, d2) = (Decomposer::new(&g1, &opts)?, Decomposer::new(&g2, &opts)?);
    let mut sweep = Sweep { n, max_projection: 0.0, min_coefficient: f64::INFINITY, ratios: Vec::new() };
    for seed in 0..fields {
        let r1 = d1.decompose(&smooth_random_field(&g1, Rank::Sym, 4, seed))?;
        let r2 = d2.decompose(&smooth_random_field(&g2, Rank::Sym, 4, seed))?;
        sweep.max_projection = sweep.max_projection.max(r1.projection_residual).max(r2.projection_residual);
        sweep.min_coefficient = sweep.min_coefficient.min(r1.min_coefficient()).min(r2.min_coefficient());
        sweep.ratios.push(r1.reconstruction_residual / r2.reconstruction_residual);
    }
    Ok(sweep)
}

pub fn decomposition(cache: Option<&Path>) -> CliResult<Criterion> {
    let t = Instant::now();
    let sweeps = [decomposition_sweep(2, 129, 20, cache)?, decomposition_sweep(3, 33, 20, cache)?];
    let mut detail = String::new();
    for s in &sweeps {
        let (lo, hi) = s.ratio_range();
        let worst = s.ratios.iter().enumerate().filter(|(_, r)| !(3.5..=4.5).contains(*r)).map(|(i, r)| format!("seed {i}: {r:.2}"));
        let _ = write!(
            detail,
            "n={} proj {:.1e} min a^2 {:.1e} ratios [{lo:.2}, {hi:.2}] outside: {:?}; ",
            s.n,
            s.max_projection,
            s.min_coefficient,
            worst.collect::<Vec<_>>()
        );
    }
    Ok(finish(4, "decomposition", 300, t.elapsed(), sweeps.iter().all(Sweep::pass), detail))
}

/// Fourth-order central difference.
fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

/// Largest identity residual over a 1000 x 1000 grid of `(s, t)` and the
/// largest sup-relative gap between analytic and finite-difference derivatives.
pub fn corrugation_checks() -> (f64, f64) {
    let m = 1000;
    let mut identity = 0.0f64;
    for i in 0..m {
        let s = i as f64 / (m - 1) as f64;
        for j in 0..m {
            identity = identity.max(identity_residual(s, j as f64 / m as f64).abs());
        }
    }
    let h = 1e-3;
    let pts: Vec<(f64, f64)> = (0..400).map(|i| (0.05 + 0.9 * ((i * 37) % 400) as f64 / 400.0, i as f64 / 400.0)).collect();
    let mut worst = 0.0f64;
    let mut gap = |exact: &dyn Fn(f64, f64) -> f64, fd: &dyn Fn(f64, f64) -> f64| {
        let scale = pts.iter().map(|&(s, t)| exact(s, t).abs()).fold(0.0, f64::max);
        let diff = pts.iter().map(|&(s, t)| (exact(s, t) - fd(s, t)).abs()).fold(0.0, f64::max);
        worst = worst.max(diff / scale);
    };
    for k in 0..3 {
        gap(&|s, t| dt_gamma1(s, t, k + 1), &|s, t| central(|u| dt_gamma1(s, u, k), t, h));
        gap(&|s, t| dt_gamma2(s, t, k + 1), &|s, t| central(|u| dt_gamma2(s, u, k), t, h));
    }
    gap(&|s, t| corrugation::eval(s, t).ds_gamma1, &|s, t| central(|u| corrugation::eval(u, t).gamma1, s, h));
    gap(&|s, t| corrugation::eval(s, t).ds_gamma2, &|s, t| central(|u| corrugation::eval(u, t).gamma2, s, h));
    gap(&|s, t| corrugation::eval(s, t).dt_gamma1, &|s, t| central(|u| corrugation::eval(s, u).gamma1, t, h));
    gap(&|s, t| corrugation::eval(s, t).dt_gamma2, &|s, t| central(|u| corrugation::eval(s, u).gamma2, t, h));
    (identity, worst)
}

pub fn corrugation() -> CliResult<Criterion> {
    let t = Instant::now();
    let (identity, fd) = corrugation_checks();
    let detail = format!("identity {identity:.2e} (<= 1e-14), derivative gap {fd:.2e} (<= 1e-8)");
    Ok(finish(5, "corrugation", 10, t.elapsed(), identity <= 1e-14 && fd <= 1e-8, detail))
}

/// The default `run` configuration: `n = 2`, 257^2, three forced stages.
pub fn desk_run() -> CliResult<RunOutcome> {
    let cfg = Config::resolve("run", run_cmd::KEYS, None, &[])?;
    let prep = run_cmd::prepare(&cfg)?;
    Ok(run(&prep.a, &prep.v_flat, &prep.w_flat, &prep.schedule, &prep.opts)?)
}

pub fn stage_contraction(out: &RunOutcome, elapsed: Duration) -> Criterion {
    let v = out.verdicts();
    let strict = out.strict_verdicts();
    let cal = out.calibration.clone();
    let mut ok = out.halted.is_none() && out.stages_done() == 3;
    let mut detail = String::new();
    if let Some(c) = &cal {
        let _ = write!(detail, "calibrated d_margin {:.2} K {:.1}; ", c.d_margin, c.k);
    }
    for (i, r) in out.reports.iter().enumerate() {
        let good = v[i].d && v[i].c1 && v[i].c2;
        ok &= good;
        let _ = write!(
            detail,
            "q={}: |D|/delta {:.3} {} (strict {}) c1 {} c2 {}; ",
            r.params.q,
            r.d_norm / r.d_bound(),
            if v[i].d { "ok" } else { "over" },
            if strict[i].d { "ok" } else { "over" },
            v[i].c1,
            v[i].c2
        );
    }
    if let Some(e) = &out.halted {
        let _ = write!(detail, "halted: {e}");
    }
    finish(6, "stage contraction", 600, elapsed, ok, detail)
}

pub fn holder_trace(out: &RunOutcome, elapsed: Duration) -> Criterion {
    let slope = out.holder_slope();
    let growth = out.c2_growth();
    let drift_ok = out.drift <= out.drift_bound;
    let growth_ok = !growth.is_empty() && growth.iter().all(|g| *g >= 2.0);
    let detail = format!(
        "drift {:.3e} <= {:.3e}: {drift_ok}; holder slope {slope:.3} (<= 0.05): {}; |V|_2 growth {:?}: {growth_ok}",
        out.drift,
        out.drift_bound,
        slope <= 0.05,
        growth.iter().map(|g| (g * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
    finish(7, "proximity and hoelder", 600, elapsed, drift_ok && slope <= 0.05 && growth_ok, detail)
}

pub fn base_locus() -> CliResult<Criterion> {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2usize, 4, 8, 16] {
        let space = MatrixSpace::w_zero(n)?;
        let r = base_locus_probe(&space.orthonormal_doubled()?, 200, 0x10c05 + n as u64)?;
        if n <= 4 {
            ok &= r.verdict == BaseLocusVerdict::EmptyNullCone && r.min_objective >= 1e-3 && r.restarts >= 200;
        }
        parts.push(format!("W0_{n}: {} {:.3e}", r.verdict.as_str(), r.min_objective));
    }
    let single = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let r = base_locus_probe(&[single], 200, 3)?;
    ok &= r.verdict == BaseLocusVerdict::NullConePointFound && r.min_objective <= 1e-10;
    parts.push(format!("diag(1,-1): {} {:.1e}", r.verdict.as_str(), r.min_objective));
    Ok(finish(8, "base locus", 300, t.elapsed(), ok, parts.join("; ")))
}

/// Largest relative gap between the production solve and a dense Cholesky
/// of the assembled matrix, over five random fields on 33^2.
pub fn oracle_gap() -> CliResult<f64> {
    let omega = Grid::unit(2, 33)?;
    let elim = Eliminator::new(&choose_l(2)?, &omega, SolverKind::Auto)?;
    let k = elim.system.matrix();
    let mut dense = DMatrix::zeros(k.nrows, k.ncols);
    for r in 0..k.nrows {
        for (c, v) in k.row(r) {
            dense[(r, c)] += v;
        }
    }
    let chol = dense.cholesky().ok_or_else(|| kuiper::Error::Solver("dense oracle is not positive definite".into()))?;
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let d = smooth_random_field(&omega, Rank::Sym, 4, 500 + seed);
        let f = elim.system.rhs(&elim.extend(&d)?)?;
        let (u, _) = elim.system.solve(&f)?;
        let oracle = chol.solve(&DVector::from_column_slice(&f));
        let diff = oracle.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(diff / oracle.norm());
    }
    Ok(worst)
}

pub fn oracle() -> CliResult<Criterion> {
    let t = Instant::now();
    let gap = oracle_gap()?;
    Ok(finish(9, "dense oracle", 60, t.elapsed(), gap <= 1e-10, format!("max relative gap {gap:.2e} (<= 1e-10)")))
}

fn audit_cmd(overrides: &[&str]) -> CliResult<Option<String>> {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    let cfg = Config::resolve("schedule-check", schedule::KEYS, None, &o)?;
    Ok(schedule::execute(&cfg)?.failure.map(|e| e.to_string()))
}

pub fn schedule_audit() -> CliResult<Criterion> {
    let t = Instant::now();
    let default = audit_cmd(&[])?;
    let b_one = audit_cmd(&["b=1"])?.unwrap_or_default();
    let c_half = audit_cmd(&["c=3"])?.unwrap_or_default();
    let desk = make_schedule(2, 0.19, &Overrides { a: Some(4.0), ..Default::default() })?.audit(50);
    let ok = default.is_none()
        && b_one.contains("b>1")
        && c_half.contains("final")
        && desk.first_failing_stage().is_some();
    let detail = format!(
        "default passes q<=50: {}; b=1 -> `{b_one}`; c alpha=0.57 -> `{c_half}`; a=4 first failing q={:?}",
        default.is_none(),
        desk.first_failing_stage()
    );
    Ok(finish(10, "schedule audit", 1, t.elapsed(), ok, detail))
}

/// All ten criteria in order, sharing one desk run between 6 and 7.
pub fn all(cache: Option<&Path>) -> CliResult<Vec<Criterion>> {
    let mut out = vec![tables()?, spaces()?, frames(cache)?, decomposition(cache)?, corrugation()?];
    let t = Instant::now();
    let desk = desk_run()?;
    let elapsed = t.elapsed();
    out.push(stage_contraction(&desk, elapsed));
    out.push(holder_trace(&desk, elapsed));
    drop(desk);
    out.extend([base_locus()?, oracle()?, schedule_audit()?]);
    Ok(out)
}
