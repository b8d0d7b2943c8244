use kuiper::grid::{outer_gradient, sym_gradient};
use kuiper::scheme::{
    deficit, make_schedule, rescale_inputs, run, unscale, Overrides, RunOptions, ScheduleParams, StageOptions,
    StageParams, StageState, Stager,
};
use kuiper::{DecomposeOptions, Grid, GridField, Rank};

/// Stage parameters with hand-picked frequencies and no requirements.
fn params(mu: [f64; 3], delta1: f64) -> StageParams {
    StageParams {
        q: 0,
        delta_q: 1.0,
        delta_q1: delta1,
        delta_q2: delta1 * delta1,
        lambda_q: 1.0,
        lambda_q1: mu[2],
        mu: mu.to_vec(),
        l: 1e-3,
        checks: Vec::new(),
    }
}

fn constant_target(g: &Grid, delta1: f64) -> GridField {
    GridField::from_fn(g, Rank::Sym, |_, o| {
        o[0] = 0.2 * delta1;
        o[1] = delta1;
        o[2] = 0.6 * delta1;
    })
}

fn one_stage(mu: [f64; 3]) -> (StageState, kuiper::scheme::StageReport, StageState) {
    stage_on(257, mu)
}

fn stage_on(points: usize, mu: [f64; 3]) -> (StageState, kuiper::scheme::StageReport, StageState) {
    let g = Grid::unit(2, points).unwrap();
    let delta1 = 0.1;
    let a = constant_target(&g, delta1);
    let stager = Stager::new(&g, &DecomposeOptions::default(), StageOptions::default()).unwrap();
    let s0 = StageState::new(0, &a, GridField::zeros(&g, Rank::Scalar), GridField::zeros(&g, Rank::Vector)).unwrap();
    let (s1, rep) = stager.stage(&s0, &params(mu, delta1), &a).unwrap();
    (s0, rep, s1)
}

#[test]
fn separated_frequencies_contract_the_deficit() {
    // 513^2 keeps finite-difference error below the interaction error up to mu_2 = 32
    let (s0, base, _) = stage_on(513, [1.0, 2.0, 16.0]);
    let (_, fine, _) = stage_on(513, [1.0, 2.0, 32.0]);
    let (_, close, _) = stage_on(513, [1.0, 4.0, 32.0]);
    assert!(fine.d_norm < s0.d.sup_norm(), "{} vs {}", fine.d_norm, s0.d.sup_norm());
    // the interaction error scales like mu_1 / mu_2
    let halved = fine.d_norm / base.d_norm;
    let doubled = close.d_norm / fine.d_norm;
    assert!((0.45..0.6).contains(&halved), "{halved}");
    assert!((1.7..2.2).contains(&doubled), "{doubled}");
    assert!(base.projection_residual <= 1e-8);
}

#[test]
fn increments_follow_the_amplitude_law() {
    let (_, rep, _) = one_stage([1.0, 2.0, 16.0]);
    for (i, (inc, amp)) in rep.increments.iter().zip(&rep.amplitudes).enumerate() {
        let law = amp / (std::f64::consts::PI * rep.params.mu[i + 1]);
        assert!((inc / law - 1.0).abs() < 0.02, "step {i}: {inc} vs {law}");
    }
}

/// Index of the largest non-constant DFT coefficient of a sampled row.
fn dominant_frequency(row: &[f64]) -> usize {
    let m = row.len() - 1;
    let mut best = (0, 0.0);
    for k in 1..m / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, v) in row[..m].iter().enumerate() {
            let ph = 2.0 * std::f64::consts::PI * (k * j) as f64 / m as f64;
            re += v * ph.cos();
            im += v * ph.sin();
        }
        let p = re * re + im * im;
        if p > best.1 {
            best = (k, p);
        }
    }
    best.0
}

#[test]
fn each_step_oscillates_at_its_own_frequency() {
    let g = Grid::unit(2, 257).unwrap();
    let delta1 = 0.1;
    let a = constant_target(&g, delta1);
    let stager = Stager::new(&g, &DecomposeOptions::default(), StageOptions::default()).unwrap();
    let frame = &stager.decomposer.frame.xi;
    let s0 = StageState::new(0, &a, GridField::zeros(&g, Rank::Scalar), GridField::zeros(&g, Rank::Vector)).unwrap();
    let mu = [1.0, 3.0, 20.0];
    // one-direction stages isolate the individual steps
    let (s1, _) = stager.stage(&s0, &params(mu, delta1), &a).unwrap();
    let total = s1.v.sub(&s0.v).unwrap();
    for (i, xi) in frame.iter().enumerate() {
        let axis = if xi[0].abs() > 0.5 { 0 } else { 1 };
        let row: Vec<f64> = (0..257)
            .map(|k| {
                let mut m = [128usize, 128];
                m[axis] = k;
                total.values[g.index(&m)]
            })
            .collect();
        let f = dominant_frequency(&row) as f64;
        let expected = mu[i + 1];
        assert!((f - expected).abs() <= 0.1 * expected, "direction {i}: {f} vs {expected}");
    }
}

#[test]
fn stored_deficit_matches_recomputation() {
    let (_, _, s1) = one_stage([1.0, 2.0, 16.0]);
    let g = s1.v.grid.clone();
    let a = constant_target(&g, 0.1);
    let again = deficit(&a, &s1.v, &s1.w).unwrap();
    assert!(again.sub(&s1.d).unwrap().sup_norm() <= 1e-12);
    let mut by_hand = a.clone();
    by_hand.axpy(-1.0, &outer_gradient(&s1.v).unwrap()).unwrap();
    by_hand.axpy(-1.0, &sym_gradient(&s1.w).unwrap()).unwrap();
    assert!(by_hand.sub(&s1.d).unwrap().sup_norm() <= 1e-12);
}

fn desk() -> ScheduleParams {
    make_schedule(
        2,
        0.19,
        &Overrides { a: Some(2.0), b: Some(1.2), c: Some(2.55), k: Some(1.1), c_star: Some(1.1), ..Default::default() },
    )
    .unwrap()
}

#[test]
fn rescaling_examples() {
    let g = Grid::unit(2, 17).unwrap();
    let p = desk();
    let zero = rescale_inputs(
        &GridField::zeros(&g, Rank::Sym),
        &GridField::zeros(&g, Rank::Scalar),
        &GridField::zeros(&g, Rank::Vector),
        &p,
    )
    .unwrap();
    assert_eq!(zero.tau, 100.0);
    let id = GridField::from_fn(&g, Rank::Sym, |_, o| o.copy_from_slice(&[0.0, 1.0, 1.0]));
    let r = rescale_inputs(&id, &GridField::zeros(&g, Rank::Scalar), &GridField::zeros(&g, Rank::Vector), &p).unwrap();
    assert_eq!(r.tau, 101.0 + 2f64.sqrt() - 1.0);
    let d0 = deficit(&r.a_bar, &r.v0, &r.w0).unwrap().sup_norm();
    assert!((d0 - r.delta1 * 2f64.sqrt() / r.tau).abs() <= 1e-15);
}

#[test]
fn unscaled_solutions_solve_the_original_equation() {
    let g = Grid::unit(2, 33).unwrap();
    let p = desk();
    let a = GridField::from_fn(&g, Rank::Sym, |x, o| o.copy_from_slice(&[0.1 * x[0], 1.0, 1.0 + x[1]]));
    let r = rescale_inputs(&a, &GridField::zeros(&g, Rank::Scalar), &GridField::zeros(&g, Rank::Vector), &p).unwrap();
    // manufactured pair solving the rescaled equation exactly
    let v = GridField::from_fn(&g, Rank::Scalar, |x, o| o[0] = 0.3 * x[0] * x[1] + 0.1 * x[0]);
    let w = GridField::from_fn(&g, Rank::Vector, |x, o| o.copy_from_slice(&[0.1 * x[1] * x[1], -0.2 * x[0]]));
    let mut a_bar = outer_gradient(&v).unwrap();
    a_bar.axpy(1.0, &sym_gradient(&w).unwrap()).unwrap();
    let (v2, w2) = unscale(&v, &w, &r);
    let a_orig = a_bar.scaled(r.tau / r.delta1);
    let res = deficit(&a_orig, &v2, &w2).unwrap().sup_norm();
    assert!(res <= 1e-12 * a_orig.sup_norm(), "{res:e}");
}

#[test]
fn infeasible_inputs_rejected() {
    let g = Grid::unit(2, 17).unwrap();
    let p = desk();
    let zero = GridField::zeros(&g, Rank::Sym);
    let mut bad = GridField::zeros(&g, Rank::Scalar);
    bad.values[3] = f64::NAN;
    assert!(rescale_inputs(&zero, &bad, &GridField::zeros(&g, Rank::Vector), &p).is_err());
    let g3 = Grid::unit(3, 5).unwrap();
    let r = rescale_inputs(
        &GridField::zeros(&g3, Rank::Sym),
        &GridField::zeros(&g3, Rank::Scalar),
        &GridField::zeros(&g3, Rank::Vector),
        &p,
    );
    assert!(r.is_err());
}

#[test]
fn forced_run_reports_failed_requirements() {
    let g = Grid::unit(2, 97).unwrap();
    let p = desk();
    let a = GridField::from_fn(&g, Rank::Sym, |x, o| o.copy_from_slice(&[0.1 * x[0], 1.0, 1.0]));
    let v = GridField::zeros(&g, Rank::Scalar);
    let w = GridField::zeros(&g, Rank::Vector);
    let forced = RunOptions { stages: 1, stage: StageOptions { forced: true, ..Default::default() }, ..Default::default() };
    let out = run(&a, &v, &w, &p, &forced).unwrap();
    assert!(out.halted.is_none());
    let failed: Vec<&str> = p.stage(0).failed_checks().map(|c| c.name).collect();
    assert!(!failed.is_empty());
    assert_eq!(out.reports[0].forced_failures, failed);
    let strict = RunOptions { stages: 1, ..Default::default() };
    let out = run(&a, &v, &w, &p, &strict).unwrap();
    assert_eq!(out.stages_done(), 0);
    assert!(out.halted.unwrap().to_string().contains("forced mode"));
}
