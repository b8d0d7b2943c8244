//! One-periodic corrugation profiles
//!
//! `Gamma1(s, t) = (s / pi) sin(2 pi t)` and
//! `Gamma2(s, t) = -(s^2 / 4 pi) sin(4 pi t)`, which satisfy
//! `d_t Gamma2 + 1/2 (d_t Gamma1)^2 = s^2` identically.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Profiles and their first derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corrugation {
    pub gamma1: f64,
    pub gamma2: f64,
    pub dt_gamma1: f64,
    pub dt_gamma2: f64,
    pub ds_gamma1: f64,
    pub ds_gamma2: f64,
}

pub fn eval(s: f64, t: f64) -> Corrugation {
    let (s2, c2) = (2.0 * PI * t).sin_cos();
    let (s4, c4) = (4.0 * PI * t).sin_cos();
    Corrugation {
        gamma1: s / PI * s2,
        gamma2: -s * s / (4.0 * PI) * s4,
        dt_gamma1: 2.0 * s * c2,
        dt_gamma2: -s * s * c4,
        ds_gamma1: s2 / PI,
        ds_gamma2: -s / (2.0 * PI) * s4,
    }
}

/// `d_t^k Gamma1`.
pub fn dt_gamma1(s: f64, t: f64, k: u32) -> f64 {
    s / PI * (2.0 * PI).powi(k as i32) * (2.0 * PI * t + k as f64 * PI / 2.0).sin()
}

/// `d_t^k Gamma2`.
pub fn dt_gamma2(s: f64, t: f64, k: u32) -> f64 {
    -s * s / (4.0 * PI) * (4.0 * PI).powi(k as i32) * (4.0 * PI * t + k as f64 * PI / 2.0).sin()
}

/// `d_t Gamma2 + 1/2 (d_t Gamma1)^2 - s^2`, zero up to rounding.
pub fn identity_residual(s: f64, t: f64) -> f64 {
    let c = eval(s, t);
    c.dt_gamma2 + 0.5 * c.dt_gamma1 * c.dt_gamma1 - s * s
}

/// One scaled derivative family and its supremum.
#[derive(Clone, Debug)]
pub struct BoundRow {
    pub name: &'static str,
    pub k: u32,
    /// Largest value seen over the samples.
    pub sampled: f64,
    /// Closed form supremum.
    pub exact: f64,
}

/// Highest `t`-derivative order covered by [`estimate_bounds`].
pub const BOUND_ORDER: u32 = 3;

/// Sup-norm table of the scaled derivatives `|d_t^k Gamma1| / s`,
/// `|d_s d_t^k Gamma1|`, `|d_t^k Gamma2| / s^2`, `|d_s d_t^k Gamma2| / s`
/// and `|d_s^2 d_t^k Gamma2|` for `k <= 3`, sampled over `(0,1] x [0,1]`.
///
/// Phases are stratified so that every cell of width `1 / samples` holds
/// one sample; amplitudes are uniform.
pub fn estimate_bounds(samples: usize, seed: u64) -> Vec<BoundRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|j| {
            let s = 1.0 - rng.random::<f64>();
            let t = (j as f64 + rng.random::<f64>()) / samples as f64;
            (s, t)
        })
        .collect();
    let sup = |f: &dyn Fn(f64, f64) -> f64| pts.iter().map(|&(s, t)| f(s, t).abs()).fold(0.0, f64::max);
    let mut rows = Vec::new();
    for k in 0..=BOUND_ORDER {
        let w1 = (2.0 * PI).powi(k as i32) / PI;
        let w2 = (4.0 * PI).powi(k as i32) / (4.0 * PI);
        // Gamma1 is linear and Gamma2 quadratic in s, so the s-derivatives
        // are the profiles at s = 1 times 1 or 2s.
        rows.push(BoundRow { name: "dt^k G1 / s", k, sampled: sup(&|s, t| dt_gamma1(s, t, k) / s), exact: w1 });
        rows.push(BoundRow { name: "ds dt^k G1", k, sampled: sup(&|_, t| dt_gamma1(1.0, t, k)), exact: w1 });
        rows.push(BoundRow { name: "dt^k G2 / s^2", k, sampled: sup(&|s, t| dt_gamma2(s, t, k) / (s * s)), exact: w2 });
        rows.push(BoundRow {
            name: "ds dt^k G2 / s",
            k,
            sampled: sup(&|s, t| 2.0 * s * dt_gamma2(1.0, t, k) / s),
            exact: 2.0 * w2,
        });
        rows.push(BoundRow { name: "ds^2 dt^k G2", k, sampled: sup(&|_, t| 2.0 * dt_gamma2(1.0, t, k)), exact: 2.0 * w2 });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        let c = eval(1.0, 0.25);
        assert!((c.gamma1 - 1.0 / PI).abs() < 1e-15);
        assert!(c.gamma2.abs() < 1e-15);
        assert!((c.dt_gamma2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_holds() {
        for &(s, t) in &[(0.0, 0.3), (0.7, 0.1), (-1.0, 0.9), (2.5, 0.5)] {
            assert!(identity_residual(s, t).abs() <= 1e-14 * (1.0 + s * s));
        }
    }

    #[test]
    fn zero_amplitude_vanishes() {
        let c = eval(0.0, 0.37);
        assert_eq!([c.gamma1, c.gamma2, c.dt_gamma1, c.dt_gamma2, c.ds_gamma2], [0.0; 5]);
        // Gamma1 is linear in s, so its s-derivative survives.
        assert!((c.ds_gamma1 - (2.0 * PI * 0.37).sin() / PI).abs() < 1e-15);
    }

    #[test]
    fn derivative_orders_match_closed_forms() {
        let (s, t) = (0.8, 0.37);
        let c = eval(s, t);
        assert!((dt_gamma1(s, t, 0) - c.gamma1).abs() < 1e-15);
        assert!((dt_gamma1(s, t, 1) - c.dt_gamma1).abs() < 1e-14);
        assert!((dt_gamma2(s, t, 1) - c.dt_gamma2).abs() < 1e-14);
    }

    #[test]
    fn bounds_table_is_sharp() {
        let rows = estimate_bounds(20_000, 1);
        assert_eq!(rows.len(), 20);
        for row in &rows {
            assert!(row.sampled <= row.exact * (1.0 + 1e-12), "{row:?}");
            assert!(row.sampled >= 0.999 * row.exact, "{row:?}");
        }
        assert!((rows[0].sampled - 1.0 / PI).abs() < 1e-6);
        assert!((rows[5].sampled - 2.0).abs() < 1e-6);
    }
}
