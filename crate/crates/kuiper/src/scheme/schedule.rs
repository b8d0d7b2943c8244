//! Amplitude/frequency schedule `delta_q = a^(-b^q)`, `lambda_q = a^(c b^q)`
//! and the audit of the inequalities that make a stage contract.
//!
//! Every quantity is handled through its logarithm so that full-scale
//! parameters (`a` with thousands of binary digits) stay representable.

use std::fmt;

use crate::algebra::xi_index;
use crate::error::{Error, Result};

/// Number of stages covered when a schedule is chosen or audited by default.
pub const AUDIT_STAGES: usize = 50;

/// `1 / (1 + 2 Xi_n)`, the supremum of admissible Hoelder exponents.
pub fn alpha_threshold(n: usize) -> Result<f64> {
    Ok(1.0 / (1.0 + 2.0 * xi_index(n)? as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleParams {
    pub n: usize,
    pub xi: usize,
    /// `ln a`.
    pub log_a: f64,
    pub b: f64,
    pub c: f64,
    pub k: f64,
    pub c_star: f64,
    pub script_c: f64,
    pub alpha: f64,
}

/// Values replacing the defaults of [`make_schedule`].
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub a: Option<f64>,
    pub log_a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub k: Option<f64>,
    pub c_star: Option<f64>,
    pub script_c: Option<f64>,
    /// `C^1` norm of the data `A`, entering the default of `script_c`.
    pub a_norm: Option<f64>,
    /// Stages the automatic choice of `a` must cover.
    pub stages: Option<usize>,
}

/// Frequencies and scales of one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageParams {
    pub q: usize,
    pub delta_q: f64,
    pub delta_q1: f64,
    pub delta_q2: f64,
    pub lambda_q: f64,
    pub lambda_q1: f64,
    /// `mu_0, ..., mu_Xi`, geometric between `mu_0` and `lambda_{q+1}`.
    pub mu: Vec<f64>,
    /// Mollification length `1 / (C_* mu_0)`.
    pub l: f64,
    pub checks: Vec<Check>,
}

impl StageParams {
    pub fn mu0(&self) -> f64 {
        self.mu[0]
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// One audited inequality `lhs <= rhs`, both sides in natural logarithms
/// unless the name says otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub q: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl Check {
    fn le(name: &'static str, q: Option<usize>, lhs: f64, rhs: f64) -> Check {
        Check { name, q, lhs, rhs, pass: lhs <= rhs }
    }

    fn lt(name: &'static str, q: Option<usize>, lhs: f64, rhs: f64) -> Check {
        Check { name, q, lhs, rhs, pass: lhs < rhs }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "pass" } else { "FAIL" };
        match self.q {
            Some(q) => write!(f, "q={q:<3} {:<18} {:>14.6e} <= {:<14.6e} {verdict}", self.name, self.lhs, self.rhs),
            None => write!(f, "      {:<18} {:>14.6e} <= {:<14.6e} {verdict}", self.name, self.lhs, self.rhs),
        }
    }
}

/// Result of [`ScheduleParams::audit`].
#[derive(Clone, Debug, Default)]
pub struct Audit {
    pub checks: Vec<Check>,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Distinct names of the failing inequalities, in audit order.
    pub fn failed_names(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        for c in self.failures() {
            if !names.contains(&c.name) {
                names.push(c.name);
            }
        }
        names
    }

    /// First stage at which a per-stage inequality fails.
    pub fn first_failing_stage(&self) -> Option<usize> {
        self.failures().filter_map(|c| c.q).min()
    }
}

impl ScheduleParams {
    pub fn a(&self) -> f64 {
        self.log_a.exp()
    }

    pub fn log_delta(&self, q: usize) -> f64 {
        -self.b.powi(q as i32) * self.log_a
    }

    pub fn log_lambda(&self, q: usize) -> f64 {
        self.c * self.b.powi(q as i32) * self.log_a
    }

    pub fn delta(&self, q: usize) -> f64 {
        self.log_delta(q).exp()
    }

    pub fn lambda(&self, q: usize) -> f64 {
        self.log_lambda(q).exp()
    }

    /// `ln mu_i` for `i = 0..=Xi` at stage `q`.
    pub fn log_mu(&self, q: usize) -> Vec<f64> {
        let m0 = self.k.ln() + 0.5 * self.log_delta(q) + self.log_lambda(q) - 0.5 * self.log_delta(q + 1);
        let mx = self.log_lambda(q + 1);
        let xi = self.xi as f64;
        (0..=self.xi)
            .map(|i| {
                let s = i as f64 / xi;
                (1.0 - s) * m0 + s * mx
            })
            .collect()
    }

    /// Parameter-domain errors; the inequalities of the audit are not checked.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.log_a > 0.0 && self.log_a.is_finite()) {
            bad.push("a > 1");
        }
        if !(self.b > 1.0 && self.b < 2.0) {
            bad.push("1 < b < 2");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            bad.push("c > 0");
        }
        if !(self.k > 1.0 && self.k.is_finite()) {
            bad.push("K > 1");
        }
        if !(self.c_star > 1.0 && self.c_star.is_finite()) {
            bad.push("C_star > 1");
        }
        if !(self.script_c > self.c_star * self.c_star) {
            bad.push("script_C > C_star^2");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bad.push("0 < alpha < 1");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(format!("schedule parameters violate {}", bad.join(", "))))
        }
    }

    /// Stage-`q` frequencies together with the stage requirements
    /// `C_* mu_0 <= mu_1`, `l <= delta_{q+2} / script_C` and
    /// `mu_0 / mu_Xi <= (delta_{q+2} / (script_C delta_{q+1}))^Xi`.
    pub fn stage(&self, q: usize) -> StageParams {
        let log_mu = self.log_mu(q);
        let log_l = -self.c_star.ln() - log_mu[0];
        let mu: Vec<f64> = log_mu.iter().map(|m| m.exp()).collect();
        StageParams {
            q,
            delta_q: self.delta(q),
            delta_q1: self.delta(q + 1),
            delta_q2: self.delta(q + 2),
            lambda_q: self.lambda(q),
            lambda_q1: self.lambda(q + 1),
            mu,
            l: log_l.exp(),
            checks: self.stage_checks(q),
        }
    }

    fn stage_checks(&self, q: usize) -> Vec<Check> {
        let lm = self.log_mu(q);
        let xi = self.xi as f64;
        let log_l = -self.c_star.ln() - lm[0];
        let ln_sc = self.script_c.ln();
        let qq = Some(q);
        vec![
            Check::lt("mu0>1", qq, 0.0, lm[0]),
            Check::le("dagger-C", qq, self.c_star.ln() + lm[0], lm[1]),
            Check::le("dagger-delta-l", qq, log_l, self.log_delta(q + 2) - ln_sc),
            Check::le(
                "dagger-delta-mu",
                qq,
                lm[0] - lm[self.xi],
                xi * (self.log_delta(q + 2) - ln_sc - self.log_delta(q + 1)),
            ),
        ]
    }

    /// The three closing inequalities in the form they are stated for the
    /// schedule, with `a` kept symbolic through `ln a`.
    fn step3_checks(&self, q: usize) -> Vec<Check> {
        let (b, c, la) = (self.b, self.c, self.log_a);
        let bq = b.powi(q as i32);
        let xi = self.xi as f64;
        let (lk, lcs, lsc) = (self.k.ln(), self.c_star.ln(), self.script_c.ln());
        let qq = Some(q);
        vec![
            Check::le("step3-1", qq, lcs + lk / xi, (c - 0.5) * (b - 1.0) * bq * la),
            Check::le("step3-2", qq, lsc + b * b * bq * la, lk + lcs + ((b - 1.0) / 2.0 + c) * bq * la),
            Check::le("step3-3", qq, lk + xi * lsc, (b - 1.0) * ((c - 0.5) - xi * b) * bq * la),
        ]
    }

    /// Global conditions followed by the per-stage inequalities for `q <= stages`.
    pub fn audit(&self, stages: usize) -> Audit {
        let thr = 1.0 / (1.0 + 2.0 * self.xi as f64);
        let mut checks = vec![
            Check::lt("a>1", None, 0.0, self.log_a),
            Check::lt("b>1", None, 1.0, self.b),
            Check::lt("b<2", None, self.b, 2.0),
            Check::lt("K>1", None, 1.0, self.k),
            Check::lt("C_star>1", None, 1.0, self.c_star),
            Check::lt("script_C>C_star^2", None, self.c_star * self.c_star, self.script_c),
            Check::lt("alpha<threshold", None, self.alpha, thr),
            Check::lt("c>Xi+1/2", None, self.xi as f64 + 0.5, self.c),
            Check::lt("final", None, self.c * self.alpha - 0.5, 0.0),
        ];
        for q in 0..=stages {
            checks.extend(self.step3_checks(q));
            checks.extend(self.stage_checks(q));
        }
        Audit { checks }
    }

    /// Checks depending on `ln a`, which are all affine in it.
    fn a_dependent(&self, stages: usize) -> Vec<Check> {
        (0..=stages).flat_map(|q| self.step3_checks(q).into_iter().chain(self.stage_checks(q))).collect()
    }
}

/// Smallest `ln a` with `a` a power of two satisfying every
/// `a`-dependent inequality for `q <= stages` that some `a` satisfies.
fn smallest_power_of_two(p: &ScheduleParams, stages: usize) -> f64 {
    let at = |la: f64| ScheduleParams { log_a: la, ..p.clone() }.a_dependent(stages);
    let (c0, c1) = (at(0.0), at(1.0));
    // every margin rhs - lhs is affine in ln a
    let growing: Vec<bool> = c0.iter().zip(&c1).map(|(u, v)| (v.rhs - v.lhs) > (u.rhs - u.lhs)).collect();
    let mut need = std::f64::consts::LN_2;
    for ((u, v), g) in c0.iter().zip(&c1).zip(&growing) {
        if *g {
            let m0 = u.rhs - u.lhs;
            need = need.max(-m0 / ((v.rhs - v.lhs) - m0));
        }
    }
    let mut k = (need / std::f64::consts::LN_2).ceil().max(1.0);
    while !at(k * std::f64::consts::LN_2).iter().zip(&growing).all(|(c, g)| c.pass || !g) {
        k += 1.0;
    }
    k * std::f64::consts::LN_2
}

/// Default schedule for dimension `n` and target exponent `alpha`.
///
/// `c` defaults to `Xi + 0.55` (lowered to the midpoint of
/// `(Xi + 1/2, 1 / (2 alpha))` when that would violate `c alpha < 1/2`) and
/// `b` to `1 + (c - 1/2 - Xi) / (2 Xi)`, half way into the window left by the
/// third closing inequality. Unless overridden, `a` is the smallest power of
/// two satisfying the audit for `q <= stages`.
pub fn make_schedule(n: usize, alpha: f64, ov: &Overrides) -> Result<ScheduleParams> {
    let xi = xi_index(n)?;
    let thr = 1.0 / (1.0 + 2.0 * xi as f64);
    if !(alpha > 0.0 && alpha < thr) {
        return Err(Error::invalid(format!(
            "alpha_target {alpha} is not in (0, {thr:.6}) = (0, 1/(1+2*{xi}))"
        )));
    }
    let xf = xi as f64;
    let c = ov.c.unwrap_or_else(|| {
        let c = xf + 0.55;
        if c * alpha < 0.5 {
            c
        } else {
            0.5 * (xf + 0.5 + 0.5 / alpha)
        }
    });
    let b = ov.b.unwrap_or(1.0 + (c - 0.5 - xf) / (2.0 * xf));
    let k = ov.k.unwrap_or(2.0);
    let c_star = ov.c_star.unwrap_or(2.0);
    let script_c = ov.script_c.unwrap_or(c_star * c_star + ov.a_norm.unwrap_or(1.0) + 1.0);
    let mut p = ScheduleParams { n, xi, log_a: std::f64::consts::LN_2, b, c, k, c_star, script_c, alpha };
    p.log_a = match (ov.log_a, ov.a) {
        (Some(la), _) => la,
        (None, Some(a)) => a.ln(),
        (None, None) => smallest_power_of_two(&p, ov.stages.unwrap_or(AUDIT_STAGES)),
    };
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default2() -> ScheduleParams {
        make_schedule(2, 0.19, &Overrides::default()).unwrap()
    }

    #[test]
    fn thresholds() {
        assert!((alpha_threshold(2).unwrap() - 0.2).abs() < 1e-15);
        assert!((alpha_threshold(3).unwrap() - 1.0 / 11.0).abs() < 1e-15);
        assert!(make_schedule(3, 0.1, &Overrides::default()).is_err());
        assert!(make_schedule(2, 0.2, &Overrides::default()).is_err());
    }

    #[test]
    fn default_schedule_passes_audit() {
        let p = default2();
        p.validate().unwrap();
        let audit = p.audit(AUDIT_STAGES);
        assert!(audit.passed(), "{:?}", audit.failed_names());
        // a is the smallest power of two that works
        let smaller = ScheduleParams { log_a: p.log_a - std::f64::consts::LN_2, ..p.clone() };
        assert!(!smaller.audit(AUDIT_STAGES).passed());
        assert!((p.log_a / std::f64::consts::LN_2).fract() == 0.0);
    }

    #[test]
    fn schedule_is_monotone() {
        let p = ScheduleParams { log_a: 2f64.ln(), ..default2() };
        for q in 0..6 {
            assert!(p.delta(q + 1) < p.delta(q));
            assert!(p.lambda(q + 1) > p.lambda(q));
        }
        assert_eq!(p.delta(0), 0.5);
    }

    #[test]
    fn stage_frequencies() {
        let p = ScheduleParams { log_a: 3f64.ln(), ..default2() };
        let s = p.stage(1);
        let x = p.xi as f64;
        for i in 0..=p.xi {
            let expect = s.mu[0].powf(1.0 - i as f64 / x) * s.mu[p.xi].powf(i as f64 / x);
            assert!((s.mu[i] / expect - 1.0).abs() < 1e-12);
        }
        assert!((s.l * p.c_star * s.mu0() - 1.0).abs() < 1e-12);
        assert!((s.mu[p.xi] / p.lambda(2) - 1.0).abs() < 1e-12);
        let mu0 = p.k * p.delta(1).sqrt() * p.lambda(1) / p.delta(2).sqrt();
        assert!((s.mu0() / mu0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn b_at_most_one_fails() {
        let p = ScheduleParams { b: 1.0, ..default2() };
        let names = p.audit(10).failed_names();
        assert!(names.contains(&"b>1") && names.contains(&"step3-1"), "{names:?}");
        assert!(p.validate().is_err());
    }

    #[test]
    fn c_alpha_at_least_half_fails() {
        let p = ScheduleParams { c: 2.7, ..default2() };
        let names = p.audit(10).failed_names();
        assert!(names.contains(&"final"), "{names:?}");
    }

    #[test]
    fn desk_schedule_fails_somewhere() {
        let p = make_schedule(2, 0.19, &Overrides { a: Some(4.0), ..Default::default() }).unwrap();
        let audit = p.audit(10);
        assert_eq!(audit.first_failing_stage(), Some(0));
    }
}
