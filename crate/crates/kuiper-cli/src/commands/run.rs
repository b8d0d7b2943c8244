use std::fmt::Write as _;
use std::path::Path;

use kuiper::grid::{norms, read_field, smooth_random_field, write_field, HolderOptions};
use kuiper::scheme::{
    run, very_weak_residual, Calibration, RunOptions, RunOutcome, ScheduleParams, StageOptions, StageVerdict,
};
use kuiper::{Grid, GridField, Rank};

use crate::config::{key, Config, Key};
use crate::error::{CliError, CliResult};
use crate::{provenance, Output};

use super::decompose::solver_kind;
use super::schedule::{params_text, schedule_from};

pub const KEYS: &[Key] = &[
    key("n", "2", "dimension (2 or 3)"),
    key("grid", "257", "grid points per axis"),
    key("a", "2", "base of the schedule"),
    key("log_a", "", "natural logarithm of a; takes precedence over a"),
    key("b", "1.2", "growth exponent"),
    key("c", "2.55", "frequency exponent"),
    key("K", "1.1", "stage constant"),
    key("C_star", "1.1", "mollification constant"),
    key("script_C", "", "stage constant (default: C_star^2 + |A|_1 + 1)"),
    key("alpha_target", "0.19", "Hoelder exponent of the trace"),
    key("stages", "3", "number of stages"),
    key("seed", "1", "seed of the generated data and of the Hoelder estimate"),
    key("A", "", "symmetric field file (default: identity plus a smooth random field)"),
    key("v_flat", "", "scalar field file (default: smooth random)"),
    key("w_flat", "", "vector field file (default: zero)"),
    key("out", "run", "output directory"),
    key("forced_mode", "true", "run stages whose requirements fail"),
    key("save_stages", "all", "states written as fields: all, none or a list like 0,3"),
    key("min_points_per_period", "6", "resolution guard of the top frequency"),
    key("solver", "auto", "auto, direct or cg"),
    key("frame_cache", "", "directory of cached frames"),
    key("holder_pairs", "20000", "random pairs of the Hoelder estimate"),
];

/// Everything a run needs, resolved from a configuration.
pub struct Prepared {
    pub a: GridField,
    pub v_flat: GridField,
    pub w_flat: GridField,
    pub schedule: ScheduleParams,
    pub opts: RunOptions,
    pub save: Vec<usize>,
}

fn load(path: &Path, rank: Rank, grid: &Grid, what: &str) -> CliResult<GridField> {
    let f = read_field(path)?;
    if f.rank != rank || &f.grid != grid {
        return Err(CliError::config(format!("{what} in {} does not match n and grid", path.display())));
    }
    Ok(f)
}

/// `Id + 1/2 R_A`, `1/2 R_v` and `0` with seeded smooth random fields `R`.
pub fn default_inputs(grid: &Grid, seed: u64) -> (GridField, GridField, GridField) {
    let n = grid.dim();
    let mut a = smooth_random_field(grid, Rank::Sym, 4, seed).scaled(0.5);
    let off = n * (n - 1) / 2;
    for idx in 0..grid.len() {
        let k = a.ncomp();
        for d in off..k {
            a.values[idx * k + d] += 1.0;
        }
    }
    let v = smooth_random_field(grid, Rank::Scalar, 4, seed.wrapping_add(1)).scaled(0.5);
    (a, v, GridField::zeros(grid, Rank::Vector))
}

fn parse_save(s: &str, stages: usize) -> CliResult<Vec<usize>> {
    match s {
        "all" => Ok((0..=stages).collect()),
        "none" | "" => Ok(Vec::new()),
        list => list
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|e| CliError::config(format!("save_stages `{x}`: {e}"))))
            .collect(),
    }
}

pub fn prepare(cfg: &Config) -> CliResult<Prepared> {
    let n: usize = cfg.get("n")?;
    if !(2..=3).contains(&n) {
        return Err(CliError::config(format!("field runs support n = 2 or 3, got {n}")));
    }
    let grid = Grid::unit(n, cfg.get("grid")?)?;
    let seed: u64 = cfg.get("seed")?;
    let (mut a, mut v, mut w) = default_inputs(&grid, seed);
    if let Some(p) = cfg.path("A") {
        a = load(&p, Rank::Sym, &grid, "A")?;
    }
    if let Some(p) = cfg.path("v_flat") {
        v = load(&p, Rank::Scalar, &grid, "v_flat")?;
    }
    if let Some(p) = cfg.path("w_flat") {
        w = load(&p, Rank::Vector, &grid, "w_flat")?;
    }
    let stages: usize = cfg.get("stages")?;
    let schedule = schedule_from(cfg, Some(norms(&a).c1), stages)?;
    let opts = RunOptions {
        stages,
        stage: StageOptions { forced: cfg.flag("forced_mode")?, min_points_per_period: cfg.get("min_points_per_period")? },
        decompose: kuiper::DecomposeOptions {
            solver: solver_kind(cfg.raw("solver"))?,
            frame_cache: cfg.path("frame_cache"),
            ..Default::default()
        },
        holder: HolderOptions { random_pairs: cfg.get("holder_pairs")?, seed },
        keep_states: true,
    };
    let save = parse_save(cfg.raw("save_stages"), stages)?;
    Ok(Prepared { a, v_flat: v, w_flat: w, schedule, opts, save })
}

pub const STAGE_COLUMNS: &str = "q,delta_q,lambda_q,mu0,l,D_norm,bound,pass,V_c1,V_c2,holder_seminorm";

fn stage_csv(hash: &str, p: &ScheduleParams, cal: Option<&Calibration>, row: &kuiper::scheme::StateRow, pass: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# config_hash = {hash}");
    for (k, v) in [
        ("n", p.n.to_string()),
        ("xi_n", p.xi.to_string()),
        ("log_a", p.log_a.to_string()),
        ("b", p.b.to_string()),
        ("c", p.c.to_string()),
        ("K", p.k.to_string()),
        ("C_star", p.c_star.to_string()),
        ("script_C", p.script_c.to_string()),
        ("alpha", p.alpha.to_string()),
        ("d_margin", cal.map_or(1.0, |c| c.d_margin).to_string()),
    ] {
        let _ = writeln!(s, "# {k} = {v}");
    }
    let _ = writeln!(s, "{STAGE_COLUMNS}");
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{},{},{},{},{}",
        row.q, row.delta_q, row.lambda_q, row.mu0, row.l, row.d_norm, row.bound, pass, row.v_c1, row.v_c2, row.holder
    );
    s
}

fn checks_csv(hash: &str, out: &RunOutcome) -> String {
    let mut s = format!("# config_hash = {hash}\nscope,q,name,measured,bound,strict_pass,calibrated_pass\n");
    let audit = out.schedule.audit(out.reports.len().saturating_sub(1));
    for c in audit.checks.iter().filter(|c| c.q.is_none()) {
        let _ = writeln!(s, "schedule,,{},{},{},{},{}", c.name, c.lhs, c.rhs, c.pass, c.pass);
    }
    for r in &out.reports {
        for c in &r.params.checks {
            let _ = writeln!(s, "schedule,{},{},{},{},{},{}", r.params.q, c.name, c.lhs, c.rhs, c.pass, c.pass);
        }
    }
    let strict = out.strict_verdicts();
    let cal = out.verdicts();
    for (i, r) in out.reports.iter().enumerate() {
        let (st, ca) = (strict[i], cal.get(i).copied().unwrap_or(strict[i]));
        let q = r.params.q;
        for (name, measured, bound, sp, cp) in [
            ("D_next", r.d_norm, r.d_bound(), st.d, ca.d),
            ("increment_c0", r.diff_c0, r.c0_bound(), st.c0, ca.c0),
            ("increment_c1", r.diff_c1, out.schedule.k * r.c1_scale(), st.c1, ca.c1),
            ("pair_c2", r.pair_c2, out.schedule.k * r.c2_scale(), st.c2, ca.c2),
        ] {
            let _ = writeln!(s, "stage,{q},{name},{measured},{bound},{sp},{cp}");
        }
    }
    let dp = out.drift <= out.drift_bound;
    let _ = writeln!(s, "run,,drift,{},{},{dp},{dp}", out.drift, out.drift_bound);
    s
}

fn verdict_str(v: &StageVerdict) -> String {
    format!("D={} c0={} c1={} c2={}", v.d, v.c0, v.c1, v.c2)
}

pub fn summary_text(hash: &str, out: &RunOutcome, weak: Option<(f64, f64)>) -> String {
    let mut s = format!("# config_hash = {hash}\n");
    s.push_str(&params_text(&out.schedule));
    let _ = writeln!(s, "tau = {}", out.rescale.tau);
    let _ = writeln!(s, "delta_1 = {}", out.rescale.delta1);
    let _ = writeln!(s, "stages_done = {}", out.stages_done());
    let _ = writeln!(s, "halted = {}", out.halted.as_ref().map_or_else(|| "no".to_string(), |e| e.to_string()));
    if let Some(c) = &out.calibration {
        let _ = writeln!(s, "calibration_factor = {}", Calibration::FACTOR);
        let _ = writeln!(s, "calibrated_d_margin = {}", c.d_margin);
        let _ = writeln!(s, "calibrated_c0_margin = {}", c.c0_margin);
        let _ = writeln!(s, "calibrated_K = {}", c.k);
    }
    for (i, r) in out.reports.iter().enumerate() {
        let q = r.params.q;
        let p = |s: &mut String, k: &str, v: String| {
            let _ = writeln!(s, "stage_{q}.{k} = {v}");
        };
        p(&mut s, "mu", format!("{:?}", r.params.mu));
        p(&mut s, "l", r.params.l.to_string());
        p(&mut s, "forced_failures", if r.forced_failures.is_empty() { "none".into() } else { r.forced_failures.join(",") });
        p(&mut s, "points_per_period", r.points_per_period.to_string());
        p(&mut s, "tilde_ratio", r.tilde_ratio.to_string());
        p(&mut s, "mollify_error", r.mollify_error.to_string());
        p(&mut s, "sigma0", r.sigma0.to_string());
        p(&mut s, "projection_residual", r.projection_residual.to_string());
        p(&mut s, "reconstruction_residual", r.reconstruction_residual.to_string());
        p(&mut s, "solver", r.solver.to_string());
        p(&mut s, "amplitudes", format!("{:?}", r.amplitudes));
        p(&mut s, "amplitude_constant", r.amplitude_constant().to_string());
        p(&mut s, "D_ratio", (r.d_norm / r.d_bound()).to_string());
        p(&mut s, "strict", verdict_str(&out.strict_verdicts()[i]));
        if let Some(v) = out.verdicts().get(i) {
            p(&mut s, "calibrated", verdict_str(v));
        }
    }
    let _ = writeln!(s, "drift = {}", out.drift);
    let _ = writeln!(s, "drift_bound = {}", out.drift_bound);
    let _ = writeln!(s, "holder_slope = {}", out.holder_slope());
    let _ = writeln!(s, "c2_growth = {:?}", out.c2_growth());
    if let Some((w, b)) = weak {
        let _ = writeln!(s, "weak_residual_normalized = {w}");
        let _ = writeln!(s, "weak_residual_bound = {b}");
    }
    s
}

/// Largest normalised very weak pairing of the last state (rescaled
/// variables) and `10 delta_{Q+1}`; planar runs only.
pub fn weak_check(out: &RunOutcome) -> CliResult<Option<(f64, f64)>> {
    if out.last.v.grid.dim() != 2 {
        return Ok(None);
    }
    let r = very_weak_residual(&out.last.v, &out.last.w, &out.rescale.a_bar)?;
    let bound = 10.0 * out.rows.last().map_or(f64::NAN, |r| r.bound);
    Ok(Some((r.max_normalized(), bound)))
}

pub fn write_outputs(dir: &Path, cfg: &Config, prep: &Prepared, out: &RunOutcome) -> CliResult<()> {
    provenance::create_dir(dir)?;
    let hash = cfg.hash();
    provenance::write(&dir.join("config.txt"), &cfg.provenance())?;
    let pass = out.row_pass();
    for (row, ok) in out.rows.iter().zip(&pass) {
        let text = stage_csv(&hash, &out.schedule, out.calibration.as_ref(), row, *ok);
        provenance::write(&dir.join(format!("stage_{:03}.csv", row.q)), &text)?;
    }
    provenance::write(&dir.join("checks.csv"), &checks_csv(&hash, out))?;
    provenance::write(&dir.join("summary.txt"), &summary_text(&hash, out, weak_check(out)?))?;
    let mut fields = Vec::new();
    for st in out.states.iter().filter(|s| prep.save.contains(&s.q)) {
        for (name, f) in [(format!("V_{:03}.cifd", st.q), &st.v), (format!("W_{:03}.cifd", st.q), &st.w)] {
            write_field(&dir.join(&name), f)?;
            fields.push(name);
        }
    }
    for (name, f) in [("v.cifd", &out.v), ("w.cifd", &out.w)] {
        write_field(&dir.join(name), f)?;
        fields.push(name.to_string());
    }
    provenance::write_manifest(dir, &hash, &fields)
}

/// First calibrated stage failure, if any.
pub fn calibrated_failure(out: &RunOutcome) -> Option<String> {
    out.verdicts().iter().zip(&out.reports).find(|(v, _)| !v.all()).map(|(v, r)| {
        format!("stage {} fails its calibrated bounds ({})", r.params.q, verdict_str(v))
    })
}

pub fn execute(cfg: &Config) -> CliResult<Output> {
    let prep = prepare(cfg)?;
    let out = run(&prep.a, &prep.v_flat, &prep.w_flat, &prep.schedule, &prep.opts)?;
    let dir = cfg.path("out").ok_or_else(|| CliError::config("`out` must be set"))?;
    write_outputs(&dir, cfg, &prep, &out)?;
    let text = summary_text(&cfg.hash(), &out, weak_check(&out)?);
    let failure = match out.halted {
        Some(e) => Some(CliError::Core(e)),
        None => calibrated_failure(&out).map(CliError::Check),
    };
    Ok(Output { text, failure })
}
