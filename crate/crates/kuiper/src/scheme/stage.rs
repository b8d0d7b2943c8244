use crate::corrugation;
use crate::decompose::{DecomposeOptions, Decomposer};
use crate::error::{Error, Result};
use crate::grid::{gradient, mollify, norms, outer_gradient, sym_gradient, Grid, GridField, Rank};

use super::schedule::StageParams;

/// `A - 1/2 grad v (x) grad v - Sym grad w` with the grid's differences.
pub fn deficit(a: &GridField, v: &GridField, w: &GridField) -> Result<GridField> {
    if a.rank != Rank::Sym || v.rank != Rank::Scalar || w.rank != Rank::Vector {
        return Err(Error::invalid("deficit needs a symmetric A, scalar v and vector w"));
    }
    if a.grid != v.grid || a.grid != w.grid {
        return Err(Error::invalid("deficit inputs live on different grids"));
    }
    let mut d = a.clone();
    d.axpy(-1.0, &outer_gradient(v)?)?;
    d.axpy(-1.0, &sym_gradient(w)?)?;
    Ok(d)
}

/// `(V_q, W_q)` with its deficit `D_q`.
#[derive(Clone, Debug)]
pub struct StageState {
    pub q: usize,
    pub v: GridField,
    pub w: GridField,
    pub d: GridField,
}

impl StageState {
    pub fn new(q: usize, a_bar: &GridField, v: GridField, w: GridField) -> Result<Self> {
        let d = deficit(a_bar, &v, &w)?;
        Ok(StageState { q, v, w, d })
    }

    /// `(V, W)` as one tuple field, the object whose norms the stage controls.
    pub fn pair(&self) -> Result<GridField> {
        GridField::stack(&[&self.v, &self.w])
    }
}

#[derive(Clone, Debug)]
pub struct StageOptions {
    /// Run even when a stage requirement of the schedule fails.
    pub forced: bool,
    /// Grid points per period of the highest corrugation frequency.
    pub min_points_per_period: f64,
}

impl Default for StageOptions {
    fn default() -> Self {
        StageOptions { forced: false, min_points_per_period: 6.0 }
    }
}

/// Measurements of one stage `q -> q + 1`.
#[derive(Clone, Debug)]
pub struct StageReport {
    pub params: StageParams,
    /// Names of stage requirements that failed (only possible in forced mode).
    pub forced_failures: Vec<&'static str>,
    pub points_per_period: f64,
    /// `|D_tilde|_0 / delta_{q+1}`.
    pub tilde_ratio: f64,
    /// `|A_bar - A_bar * phi_l|_0`.
    pub mollify_error: f64,
    pub sigma0: f64,
    pub projection_residual: f64,
    pub reconstruction_residual: f64,
    pub solver: &'static str,
    /// `sup a_i` per step.
    pub amplitudes: Vec<f64>,
    /// `|v_i - v_{i-1}|_0` per step.
    pub increments: Vec<f64>,
    /// `|D_{q+1}|_0`.
    pub d_norm: f64,
    /// `|(V_{q+1} - V_q, W_{q+1} - W_q)|_0` and `|.|_1`.
    pub diff_c0: f64,
    pub diff_c1: f64,
    /// `|(V_{q+1}, W_{q+1})|_2`.
    pub pair_c2: f64,
}

impl StageReport {
    /// `delta_{q+2}`.
    pub fn d_bound(&self) -> f64 {
        self.params.delta_q2
    }

    /// `(delta_{q+1}^(1/2) + 1) delta_{q+1}^(1/2) / (delta_q^(1/2) lambda_q)`.
    pub fn c0_bound(&self) -> f64 {
        let p = &self.params;
        let s = p.delta_q1.sqrt();
        (s + 1.0) * s / (p.delta_q.sqrt() * p.lambda_q)
    }

    /// `delta_{q+1}^(1/2)`, the `C^1` bound without its constant `K`.
    pub fn c1_scale(&self) -> f64 {
        self.params.delta_q1.sqrt()
    }

    /// `delta_{q+1}^(1/2) lambda_{q+1}`, the `C^2` bound without `K`.
    pub fn c2_scale(&self) -> f64 {
        self.params.delta_q1.sqrt() * self.params.lambda_q1
    }

    /// `max_i |v_i - v_{i-1}|_0 mu_i / delta_{q+1}^(1/2)`.
    pub fn amplitude_constant(&self) -> f64 {
        let s = self.params.delta_q1.sqrt();
        self.increments.iter().zip(&self.params.mu[1..]).map(|(d, mu)| d * mu / s).fold(0.0, f64::max)
    }
}

/// Runs stages on one grid, reusing the decomposition machinery.
pub struct Stager {
    pub decomposer: Decomposer,
    pub opts: StageOptions,
}

impl Stager {
    pub fn new(grid: &Grid, decompose: &DecomposeOptions, opts: StageOptions) -> Result<Self> {
        Ok(Stager { decomposer: Decomposer::new(grid, decompose)?, opts })
    }

    pub fn grid(&self) -> &Grid {
        &self.decomposer.eliminator.omega
    }

    pub fn xi_count(&self) -> usize {
        self.decomposer.frame.len()
    }

    /// Grid points per period of `sin(2 pi mu x . xi)` for unit `xi`.
    pub fn points_per_period(&self, mu: f64) -> f64 {
        1.0 / (mu * self.grid().h())
    }

    pub fn stage(&self, state: &StageState, params: &StageParams, a_bar: &GridField) -> Result<(StageState, StageReport)> {
        let q = params.q;
        let grid = self.grid().clone();
        if state.v.grid != grid {
            return Err(Error::invalid("stage state does not live on the stager grid"));
        }
        let xi_n = self.xi_count();
        if params.mu.len() != xi_n + 1 {
            return Err(Error::invalid(format!("schedule has {} frequencies, frame needs {}", params.mu.len(), xi_n + 1)));
        }
        let mu_top = params.mu[xi_n];
        let ppp = self.points_per_period(mu_top);
        if !(ppp >= self.opts.min_points_per_period) {
            return Err(Error::Nyquist { mu: mu_top, points_per_period: ppp, required: self.opts.min_points_per_period }
                .at_stage(q, "nyquist"));
        }
        let forced_failures: Vec<&'static str> = params.failed_checks().map(|c| c.name).collect();
        if !forced_failures.is_empty() {
            if !self.opts.forced {
                return Err(Error::invalid(format!(
                    "stage requirements fail: {}; rerun in forced mode to proceed",
                    forced_failures.join(", ")
                ))
                .at_stage(q, "schedule"));
            }
            log::warn!("stage {q}: forced past {}", forced_failures.join(", "));
        }

        let l = params.l;
        let v0 = mollify(&state.v, l).map_err(|e| e.at_stage(q, "mollify"))?;
        let w0 = mollify(&state.w, l).map_err(|e| e.at_stage(q, "mollify"))?;
        let a_l = mollify(a_bar, l).map_err(|e| e.at_stage(q, "mollify"))?;
        let mollify_error = a_bar.sub(&a_l)?.sup_norm();
        let tilde = deficit(&a_l, &v0, &w0)?;

        let dq1 = params.delta_q1;
        let dec = self
            .decomposer
            .decompose(&tilde.scaled(1.0 / dq1))
            .map_err(|e| e.at_stage(q, "decompose"))?;
        let phi = dec.phi.scaled(dq1);
        let amps: Vec<Vec<f64>> =
            dec.a_sq.components().iter().map(|c| c.iter().map(|s| (dq1 * s.max(0.0)).sqrt()).collect()).collect();

        let n = grid.dim();
        let mut v = v0.clone();
        let mut w = w0.sub(&phi)?;
        let mut grad_v = gradient(&v0)?;
        let mut increments = Vec::with_capacity(xi_n);
        for (i, amp) in amps.iter().enumerate() {
            let mu = params.mu[i + 1];
            let xi = &self.decomposer.frame.xi[i];
            let a_field = GridField::from_values(&grid, Rank::Scalar, amp.clone())?;
            let grad_a = gradient(&a_field)?;
            let mut inc = 0.0f64;
            for idx in 0..grid.len() {
                let x = grid.coord(idx);
                let t = mu * (0..n).map(|k| x[k] * xi[k]).sum::<f64>();
                let c = corrugation::eval(amp[idx], t);
                let dv = c.gamma1 / mu;
                inc = inc.max(dv.abs());
                v.values[idx] += dv;
                let ga = &grad_a.values[idx * n..(idx + 1) * n];
                let gv = &mut grad_v.values[idx * n..(idx + 1) * n];
                let wn = &mut w.values[idx * n..(idx + 1) * n];
                for k in 0..n {
                    wn[k] += -dv * gv[k] + c.gamma2 / mu * xi[k];
                }
                for k in 0..n {
                    gv[k] += c.dt_gamma1 * xi[k] + c.ds_gamma1 / mu * ga[k];
                }
            }
            increments.push(inc);
        }
        if !(v.is_finite() && w.is_finite()) {
            return Err(Error::NonFinite("stage output").at_stage(q, "corrugation"));
        }

        let next = StageState::new(q + 1, a_bar, v, w)?;
        let diff = GridField::stack(&[&next.v.sub(&state.v)?, &next.w.sub(&state.w)?])?;
        let diff_norms = norms(&diff);
        let report = StageReport {
            params: params.clone(),
            forced_failures,
            points_per_period: ppp,
            tilde_ratio: tilde.sup_norm() / dq1,
            mollify_error,
            sigma0: dec.sigma0,
            projection_residual: dec.projection_residual,
            reconstruction_residual: dec.reconstruction_residual,
            solver: dec.solve.method,
            amplitudes: amps.iter().map(|a| a.iter().copied().fold(0.0, f64::max)).collect(),
            increments,
            d_norm: next.d.sup_norm(),
            diff_c0: diff_norms.c0,
            diff_c1: diff_norms.c1,
            pair_c2: norms(&next.pair()?).c2,
        };
        Ok((next, report))
    }
}
