use std::fmt::Write as _;

use kuiper::scheme::{make_schedule, Audit, Overrides, ScheduleParams};

use crate::config::{key, Config, Key};
use crate::error::{CliError, CliResult};
use crate::Output;

pub const KEYS: &[Key] = &[
    key("n", "2", "dimension"),
    key("alpha_target", "0.19", "target Hoelder exponent"),
    key("a", "", "base of the schedule (default: smallest admissible power of two)"),
    key("log_a", "", "natural logarithm of a, for values beyond f64; takes precedence over a"),
    key("b", "", "growth exponent"),
    key("c", "", "frequency exponent"),
    key("K", "", "stage constant"),
    key("C_star", "", "mollification constant"),
    key("script_C", "", "stage constant of the decomposition"),
    key("a_norm", "", "C^1 norm of the data entering the default script_C"),
    key("stages", "50", "audit q = 0..=stages"),
    key("format", "text", "text or csv"),
];

/// Schedule parameters from the keys shared by `schedule-check` and `run`.
pub fn schedule_from(cfg: &Config, a_norm: Option<f64>, stages: usize) -> CliResult<ScheduleParams> {
    let ov = Overrides {
        a: cfg.opt("a")?,
        log_a: cfg.opt("log_a")?,
        b: cfg.opt("b")?,
        c: cfg.opt("c")?,
        k: cfg.opt("K")?,
        c_star: cfg.opt("C_star")?,
        script_c: cfg.opt("script_C")?,
        a_norm: cfg.opt::<f64>("a_norm")?.or(a_norm),
        stages: Some(stages),
    };
    Ok(make_schedule(cfg.get("n")?, cfg.get("alpha_target")?, &ov)?)
}

pub fn params_text(p: &ScheduleParams) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n = {}", p.n);
    let _ = writeln!(s, "xi_n = {}", p.xi);
    let _ = writeln!(s, "log_a = {}", p.log_a);
    let _ = writeln!(s, "log2_a = {}", p.log_a / std::f64::consts::LN_2);
    let _ = writeln!(s, "b = {}", p.b);
    let _ = writeln!(s, "c = {}", p.c);
    let _ = writeln!(s, "K = {}", p.k);
    let _ = writeln!(s, "C_star = {}", p.c_star);
    let _ = writeln!(s, "script_C = {}", p.script_c);
    let _ = writeln!(s, "alpha = {}", p.alpha);
    s
}

pub fn audit_csv(audit: &Audit) -> String {
    let mut s = String::from("q,check,lhs,rhs,pass\n");
    for c in &audit.checks {
        let q = c.q.map_or_else(String::new, |q| q.to_string());
        let _ = writeln!(s, "{q},{},{},{},{}", c.name, c.lhs, c.rhs, c.pass);
    }
    s
}

/// One line naming the failing inequalities, or `None` when all pass.
pub fn failure_line(audit: &Audit) -> Option<String> {
    if audit.passed() {
        return None;
    }
    let mut s = format!("schedule audit failed: {}", audit.failed_names().join(", "));
    if let Some(q) = audit.first_failing_stage() {
        let _ = write!(s, "; first failing stage q = {q}");
    }
    Some(s)
}

pub fn execute(cfg: &Config) -> CliResult<Output> {
    let stages: usize = cfg.get("stages")?;
    let p = schedule_from(cfg, None, stages)?;
    let audit = p.audit(stages);
    let failed = failure_line(&audit);
    let text = match cfg.raw("format") {
        "csv" => audit_csv(&audit),
        "text" => {
            let mut s = params_text(&p);
            s.push_str("# all quantities are natural logarithms except in the global checks\n");
            for c in &audit.checks {
                let _ = writeln!(s, "{c}");
            }
            let _ = writeln!(s, "{}", failed.as_deref().unwrap_or("schedule audit passed"));
            s
        }
        other => return Err(CliError::config(format!("unknown format `{other}`"))),
    };
    Ok(Output { text, failure: failed.map(CliError::Check) })
}
