use crate::decompose::DecomposeOptions;
use crate::error::{Error, Result};
use crate::grid::{gradient, holder_seminorm, norms, GridField, HolderOptions, Rank};

use super::schedule::ScheduleParams;
use super::stage::{deficit, StageOptions, StageReport, StageState, Stager};

/// Inputs brought to the scale where the stage iteration starts.
#[derive(Clone, Debug)]
pub struct Rescale {
    pub tau: f64,
    pub delta1: f64,
    pub a_bar: GridField,
    pub v0: GridField,
    pub w0: GridField,
}

/// `tau = |A|_0 + |v_flat|_2^2 + |w_flat|_2^2 + 100`,
/// `A_bar = delta_1 A / tau` and `(V_0, W_0) = (delta_1 / tau)^(1/2) (v_flat, w_flat)`.
///
/// Fails when the rescaled data violate `|D_0|_0 <= delta_1` or
/// `|(V_0, W_0)|_1 <= K^(1/2)`.
pub fn rescale_inputs(a: &GridField, v_flat: &GridField, w_flat: &GridField, schedule: &ScheduleParams) -> Result<Rescale> {
    if a.grid.dim() != schedule.n {
        return Err(Error::invalid(format!("data are {}-dimensional, schedule is for n={}", a.grid.dim(), schedule.n)));
    }
    for (f, what) in [(a, "A"), (v_flat, "v_flat"), (w_flat, "w_flat")] {
        if !f.is_finite() {
            return Err(Error::invalid(format!("{what} has non-finite values")));
        }
    }
    let tau = a.sup_norm() + norms(v_flat).c2.powi(2) + norms(w_flat).c2.powi(2) + 100.0;
    let delta1 = schedule.delta(1);
    let s = (delta1 / tau).sqrt();
    let r = Rescale {
        tau,
        delta1,
        a_bar: a.scaled(delta1 / tau),
        v0: v_flat.scaled(s),
        w0: w_flat.scaled(s),
    };
    let d0 = deficit(&r.a_bar, &r.v0, &r.w0)?.sup_norm();
    if d0 > delta1 {
        return Err(Error::invalid(format!("schedule infeasible for these inputs: |D_0| = {d0:.3e} > delta_1 = {delta1:.3e}")));
    }
    let c1 = norms(&GridField::stack(&[&r.v0, &r.w0])?).c1;
    if c1 > schedule.k.sqrt() {
        return Err(Error::invalid(format!("schedule infeasible for these inputs: |(V_0, W_0)|_1 = {c1:.3e} > K^(1/2)")));
    }
    Ok(r)
}

/// `(v, w) = ((tau / delta_1)^(1/2) v_, (tau / delta_1) w_)`.
pub fn unscale(v: &GridField, w: &GridField, r: &Rescale) -> (GridField, GridField) {
    let s = r.tau / r.delta1;
    (v.scaled(s.sqrt()), w.scaled(s))
}

/// `2 tau^(1/2) sum_{q >= 0} delta_{q+1}^(1/2) / (delta_1^(1/2) delta_q^(1/2) lambda_q)`,
/// the bound on `|v - v_flat|_0` for the whole iteration.
pub fn drift_bound(schedule: &ScheduleParams, tau: f64) -> f64 {
    let mut sum = 0.0;
    for q in 0..100_000 {
        let log_term = 0.5 * schedule.log_delta(q + 1) - 0.5 * schedule.log_delta(1) - 0.5 * schedule.log_delta(q)
            - schedule.log_lambda(q);
        let term = log_term.exp();
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    2.0 * tau.sqrt() * sum
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub stages: usize,
    pub stage: StageOptions,
    pub decompose: DecomposeOptions,
    pub holder: HolderOptions,
    /// Keep `(V_q, W_q)` for every `q`, not only the last.
    pub keep_states: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            stages: 1,
            stage: StageOptions::default(),
            decompose: DecomposeOptions::default(),
            holder: HolderOptions::default(),
            keep_states: false,
        }
    }
}

/// Measurements of the state `(V_q, W_q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateRow {
    pub q: usize,
    pub delta_q: f64,
    pub lambda_q: f64,
    /// `mu_0` and `l` of the stage starting from this state.
    pub mu0: f64,
    pub l: f64,
    /// `|D_q|_0` against `delta_{q+1}`.
    pub d_norm: f64,
    pub bound: f64,
    pub v_c1: f64,
    pub v_c2: f64,
    pub pair_c2: f64,
    /// `[grad V_q]_alpha`.
    pub holder: f64,
}

/// Constants replacing the implicit ones of the stage estimates: ten times
/// the ratios measured in the first stage, floored at the nominal value.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    /// Multiplier on `delta_{q+2}` for `|D_{q+1}|_0`, at least 1.
    pub d_margin: f64,
    /// Multiplier on the `C^0` bound of the increments, at least 1.
    pub c0_margin: f64,
    /// `K` for the `C^1` and `C^2` bounds, at least the schedule's `K`.
    pub k: f64,
}

impl Calibration {
    pub const FACTOR: f64 = 10.0;

    pub fn from_first_stage(r: &StageReport, schedule_k: f64) -> Self {
        let f = Self::FACTOR;
        Calibration {
            d_margin: (f * r.d_norm / r.d_bound()).max(1.0),
            c0_margin: (f * r.diff_c0 / r.c0_bound()).max(1.0),
            k: (f * (r.diff_c1 / r.c1_scale()).max(r.pair_c2 / r.c2_scale())).max(schedule_k),
        }
    }
}

/// Pass flags of one stage under a calibration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageVerdict {
    pub d: bool,
    pub c0: bool,
    pub c1: bool,
    pub c2: bool,
}

impl StageVerdict {
    pub fn all(&self) -> bool {
        self.d && self.c0 && self.c1 && self.c2
    }
}

impl Calibration {
    pub fn verdict(&self, r: &StageReport) -> StageVerdict {
        StageVerdict {
            d: r.d_norm <= self.d_margin * r.d_bound(),
            c0: r.diff_c0 <= self.c0_margin * r.c0_bound(),
            c1: r.diff_c1 <= self.k * r.c1_scale(),
            c2: r.pair_c2 <= self.k * r.c2_scale(),
        }
    }

    /// The same bounds with every constant set to its nominal value.
    pub fn strict(schedule_k: f64) -> Self {
        Calibration { d_margin: 1.0, c0_margin: 1.0, k: schedule_k }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub schedule: ScheduleParams,
    pub rescale: Rescale,
    /// One row per state `q = 0..=Q` reached.
    pub rows: Vec<StateRow>,
    pub reports: Vec<StageReport>,
    pub calibration: Option<Calibration>,
    pub last: StageState,
    /// All states when requested.
    pub states: Vec<StageState>,
    /// Unscaled final fields.
    pub v: GridField,
    pub w: GridField,
    /// `|v - v_flat|_0` and its bound.
    pub drift: f64,
    pub drift_bound: f64,
    /// Error that stopped the iteration early.
    pub halted: Option<Error>,
}

impl RunOutcome {
    pub fn stages_done(&self) -> usize {
        self.reports.len()
    }

    pub fn verdicts(&self) -> Vec<StageVerdict> {
        match &self.calibration {
            Some(c) => self.reports.iter().map(|r| c.verdict(r)).collect(),
            None => Vec::new(),
        }
    }

    pub fn strict_verdicts(&self) -> Vec<StageVerdict> {
        let c = Calibration::strict(self.schedule.k);
        self.reports.iter().map(|r| c.verdict(r)).collect()
    }

    /// Pass flag of `|D_q|_0 <= margin * delta_{q+1}` for every row.
    pub fn row_pass(&self) -> Vec<bool> {
        let m = self.calibration.as_ref().map_or(1.0, |c| c.d_margin);
        self.rows.iter().map(|r| r.d_norm <= m * r.bound).collect()
    }

    /// Least-squares slope per stage of the Hoelder trace over the stage
    /// outputs `q >= 1`, divided by its mean.
    pub fn holder_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self.rows.iter().filter(|r| r.q >= 1).map(|r| (r.q as f64, r.holder)).collect();
        if pts.len() < 2 {
            return 0.0;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        if my == 0.0 {
            0.0
        } else {
            sxy / sxx / my
        }
    }

    /// `|V_{q+1}|_2 / |V_q|_2` over the stage outputs `q >= 1`.
    pub fn c2_growth(&self) -> Vec<f64> {
        self.rows.windows(2).filter(|w| w[0].q >= 1).map(|w| w[1].v_c2 / w[0].v_c2).collect()
    }
}

fn state_row(state: &StageState, schedule: &ScheduleParams, alpha: f64, holder: &HolderOptions) -> Result<StateRow> {
    let q = state.q;
    let sp = schedule.stage(q);
    let vn = norms(&state.v);
    Ok(StateRow {
        q,
        delta_q: schedule.delta(q),
        lambda_q: schedule.lambda(q),
        mu0: sp.mu0(),
        l: sp.l,
        d_norm: state.d.sup_norm(),
        bound: schedule.delta(q + 1),
        v_c1: vn.c1,
        v_c2: vn.c2,
        pair_c2: norms(&state.pair()?).c2,
        holder: holder_seminorm(&gradient(&state.v)?, alpha, holder),
    })
}

/// Rescales the data, runs `opts.stages` stages and unscales the result.
///
/// A failing stage stops the iteration; everything measured up to that
/// point is returned together with the error.
pub fn run(a: &GridField, v_flat: &GridField, w_flat: &GridField, schedule: &ScheduleParams, opts: &RunOptions) -> Result<RunOutcome> {
    if opts.stages == 0 {
        return Err(Error::invalid("a run needs at least one stage"));
    }
    if a.rank != Rank::Sym || v_flat.rank != Rank::Scalar || w_flat.rank != Rank::Vector {
        return Err(Error::invalid("run needs a symmetric A, scalar v_flat and vector w_flat"));
    }
    schedule.validate()?;
    let rescale = rescale_inputs(a, v_flat, w_flat, schedule)?;
    let stager = Stager::new(&a.grid, &opts.decompose, opts.stage.clone())?;
    let mut state = StageState::new(0, &rescale.a_bar, rescale.v0.clone(), rescale.w0.clone())?;
    let mut rows = vec![state_row(&state, schedule, schedule.alpha, &opts.holder)?];
    let mut states = Vec::new();
    let mut reports: Vec<StageReport> = Vec::new();
    let mut halted = None;
    for q in 0..opts.stages {
        let params = schedule.stage(q);
        match stager.stage(&state, &params, &rescale.a_bar) {
            Ok((next, report)) => {
                log::info!(
                    "stage {q}: |D| = {:.3e} vs delta = {:.3e}, mu = {:?}",
                    report.d_norm,
                    report.d_bound(),
                    report.params.mu
                );
                if opts.keep_states {
                    states.push(std::mem::replace(&mut state, next));
                } else {
                    state = next;
                }
                rows.push(state_row(&state, schedule, schedule.alpha, &opts.holder)?);
                reports.push(report);
            }
            Err(e) => {
                log::error!("run halted: {e}");
                halted = Some(e);
                break;
            }
        }
    }
    if opts.keep_states {
        states.push(state.clone());
    }
    let calibration = reports.first().map(|r| Calibration::from_first_stage(r, schedule.k));
    let (v, w) = unscale(&state.v, &state.w, &rescale);
    let drift = v.sub(v_flat)?.sup_norm();
    Ok(RunOutcome {
        schedule: schedule.clone(),
        drift_bound: drift_bound(schedule, rescale.tau),
        rescale,
        rows,
        reports,
        calibration,
        last: state,
        states,
        v,
        w,
        drift,
        halted,
    })
}
