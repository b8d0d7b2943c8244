use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseLocusVerdict {
    /// A unit `x` with every `x^T A_j x` numerically zero was found.
    NullConePointFound,
    /// Every restart stayed well away from zero.
    EmptyNullCone,
    Inconclusive,
}

impl BaseLocusVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseLocusVerdict::NullConePointFound => "null_cone_point_found",
            BaseLocusVerdict::EmptyNullCone => "empty_null_cone",
            BaseLocusVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BaseLocusReport {
    pub min_objective: f64,
    pub minimizer: DVector<f64>,
    pub restarts: usize,
    pub verdict: BaseLocusVerdict,
}

const FOUND: f64 = 1e-10;
const EMPTY: f64 = 1e-6;

fn objective(mats: &[DMatrix<f64>], x: &DVector<f64>) -> (f64, DVector<f64>) {
    let mut f = 0.0;
    let mut g = DVector::zeros(x.len());
    for a in mats {
        let ax = a * x;
        let r = x.dot(&ax);
        f += r * r;
        g += ax * (4.0 * r);
    }
    let radial = g.dot(x);
    g -= x * radial;
    (f, g)
}

fn descend(mats: &[DMatrix<f64>], mut x: DVector<f64>) -> (f64, DVector<f64>) {
    x.normalize_mut();
    let (mut f, mut g) = objective(mats, &x);
    let mut step = 0.1;
    for _ in 0..400 {
        let gn2 = g.norm_squared();
        if gn2 < 1e-30 || f < 1e-24 {
            break;
        }
        let mut accepted = false;
        while step > 1e-14 {
            let trial = (&x - &g * step).normalize();
            let (ft, gt) = objective(mats, &trial);
            if ft <= f - 1e-4 * step * gn2 {
                x = trial;
                f = ft;
                g = gt;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (f, x)
}

/// Gauss-Newton polish for the zero residual case.
fn newton_polish(mats: &[DMatrix<f64>], mut x: DVector<f64>) -> (f64, DVector<f64>) {
    let d = mats.len();
    let n = x.len();
    for _ in 0..30 {
        let ax: Vec<DVector<f64>> = mats.iter().map(|a| a * &x).collect();
        let mut jac = DMatrix::zeros(d + 1, n);
        let mut rhs = DVector::zeros(d + 1);
        for j in 0..d {
            jac.row_mut(j).copy_from(&(&ax[j] * 2.0).transpose());
            rhs[j] = -x.dot(&ax[j]);
        }
        jac.row_mut(d).copy_from(&x.transpose());
        let svd = jac.svd(true, true);
        let Ok(step) = svd.solve(&rhs, 1e-12) else { break };
        let next = (&x + step).normalize();
        if !next.iter().all(|v| v.is_finite()) {
            break;
        }
        x = next;
    }
    (objective(mats, &x).0, x)
}

/// Minimises `F(x) = sum_j (x^T A_j x)^2` over the unit sphere from
/// `restarts` random starts.
pub fn base_locus_probe(mats: &[DMatrix<f64>], restarts: usize, seed: u64) -> Result<BaseLocusReport> {
    let Some(first) = mats.first() else {
        return Err(Error::invalid("base_locus_probe: empty matrix list"));
    };
    let n = first.nrows();
    if mats.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::invalid("base_locus_probe: matrices differ in size"));
    }
    if restarts == 0 {
        return Err(Error::invalid("base_locus_probe: need at least one restart"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::INFINITY, DVector::zeros(n));
    for _ in 0..restarts {
        let x0 = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let (f, x) = descend(mats, x0);
        let (fp, xp) = newton_polish(mats, x.clone());
        let cand = if fp < f { (fp, xp) } else { (f, x) };
        if cand.0 < best.0 {
            best = cand;
        }
    }
    let verdict = if best.0 <= FOUND {
        BaseLocusVerdict::NullConePointFound
    } else if best.0 > EMPTY {
        BaseLocusVerdict::EmptyNullCone
    } else {
        BaseLocusVerdict::Inconclusive
    };
    Ok(BaseLocusReport { min_objective: best.0, minimizer: best.1, restarts, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MatrixSpace;

    #[test]
    fn planar_w_zero_has_empty_cone() {
        let w = MatrixSpace::w_zero(2).unwrap();
        let r = base_locus_probe(&w.basis, 50, 1).unwrap();
        assert_eq!(r.verdict, BaseLocusVerdict::EmptyNullCone);
        assert!((r.min_objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn indefinite_single_matrix_has_cone_point() {
        let a = DMatrix::from_row_slice(2, 2, &[1., 0., 0., -1.]);
        let r = base_locus_probe(&[a], 20, 3).unwrap();
        assert_eq!(r.verdict, BaseLocusVerdict::NullConePointFound);
        assert!((r.minimizer[0].abs() - r.minimizer[1].abs()).abs() < 1e-5);
    }
}
