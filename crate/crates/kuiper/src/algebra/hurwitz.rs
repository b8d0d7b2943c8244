//! Explicit Radon-Hurwitz families of invertible matrices.

use nalgebra::DMatrix;

use super::radon_hurwitz::radon_hurwitz;
use crate::error::Result;

/// Cayley-Dickson product on `R^(2^k)`: `(a,b)(c,d) = (ac - d*b, da + bc*)`.
fn cd_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    let len = x.len();
    if len == 1 {
        return vec![x[0] * y[0]];
    }
    let h = len / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let ac = cd_mul(a, c);
    let db = cd_mul(&cd_conj(d), b);
    let da = cd_mul(d, a);
    let bc = cd_mul(b, &cd_conj(c));
    let mut out = Vec::with_capacity(len);
    out.extend(ac.iter().zip(&db).map(|(p, q)| p - q));
    out.extend(da.iter().zip(&bc).map(|(p, q)| p + q));
    out
}

fn cd_conj(x: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().map(|v| -v).collect();
    out[0] = x[0];
    out
}

/// Left multiplication matrices of the basis units of the real division
/// algebra of dimension `d` (1, 2, 4 or 8). The first entry is the identity,
/// the remaining `d - 1` are the imaginary units, each skew and orthogonal.
pub fn division_algebra_units(d: usize) -> Vec<DMatrix<f64>> {
    assert!(matches!(d, 1 | 2 | 4 | 8), "no real division algebra of dimension {d}");
    let unit = |i: usize| {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        e
    };
    (0..d)
        .map(|i| {
            let ei = unit(i);
            let mut m = DMatrix::zeros(d, d);
            for j in 0..d {
                let col = cd_mul(&ei, &unit(j));
                for k in 0..d {
                    m[(k, j)] = col[k];
                }
            }
            m
        })
        .collect()
}

pub fn kronecker(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `A (x) I + I (x) B`; its eigenvalues are all sums `alpha + beta`.
pub fn kronecker_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let ia = DMatrix::identity(a.nrows(), a.nrows());
    let ib = DMatrix::identity(b.nrows(), b.nrows());
    a.kronecker(&ib) + ia.kronecker(b)
}

/// Family for `n = 2^m`.
fn power_of_two_family(m: u32) -> Vec<DMatrix<f64>> {
    let (a, b) = (m / 4, m % 4);
    let d = 1usize << b;
    if a == 0 {
        return division_algebra_units(d);
    }
    if b == 0 {
        // symmetric bordering of the family one size down
        let inner = power_of_two_family(m - 1);
        let h = 1usize << (m - 1);
        let mut out = Vec::with_capacity(inner.len() + 1);
        let mut r = DMatrix::identity(2 * h, 2 * h);
        r.view_mut((h, h), (h, h)).fill_with_identity();
        r.view_mut((h, h), (h, h)).scale_mut(-1.0);
        out.push(r);
        for x in inner {
            let mut s = DMatrix::zeros(2 * h, 2 * h);
            s.view_mut((0, h), (h, h)).copy_from(&x);
            s.view_mut((h, 0), (h, h)).copy_from(&x.transpose());
            out.push(s);
        }
        return out;
    }
    let sym = power_of_two_family(4 * a);
    let units = division_algebra_units(d);
    let big = sym[0].nrows();
    let id_d = DMatrix::identity(d, d);
    let id_big = DMatrix::identity(big, big);
    let mut out: Vec<_> = sym.iter().map(|s| s.kronecker(&id_d)).collect();
    out.extend(units[1..].iter().map(|u| id_big.kronecker(u)));
    out
}

/// A basis of a `rho(n)`-dimensional space of `n x n` matrices whose
/// nonzero elements are all invertible.
///
/// * `n` odd: the identity alone.
/// * `n` = 2, 4, 8: left multiplication by complex numbers, quaternions,
///   octonions.
/// * `n = 16^a`: symmetric blocks `[[r I, A], [A^T, -r I]]` with `A` from
///   the family of size `n/2`.
/// * `n = 16^a d`, `d` in {2, 4, 8}: `A (x) I_d + I (x) iota` with `A` from
///   the `16^a` family and `iota` an imaginary unit.
/// * otherwise `I_(2c+1) (x) W` with `W` the family for the 2-power part.
pub fn build_invertible_space(n: usize) -> Result<Vec<DMatrix<f64>>> {
    let rh = radon_hurwitz(n)?;
    let m = n.trailing_zeros();
    let odd = n >> m;
    let fam = power_of_two_family(m);
    debug_assert_eq!(fam.len(), rh.rho);
    if odd == 1 {
        return Ok(fam);
    }
    let id = DMatrix::identity(odd, odd);
    Ok(fam.iter().map(|w| id.kronecker(w)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rho;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complex_unit_is_rotation() {
        let u = division_algebra_units(2);
        assert_eq!(u[1], DMatrix::from_row_slice(2, 2, &[0., -1., 1., 0.]));
    }

    #[test]
    fn octonion_norm_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n2 = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();
            let p = cd_mul(&x, &y);
            assert!((n2(&p) - n2(&x) * n2(&y)).abs() < 1e-12);
        }
    }

    #[test]
    fn units_are_orthogonal_and_square_to_minus_one() {
        for d in [2, 4, 8] {
            let u = division_algebra_units(d);
            let id = DMatrix::<f64>::identity(d, d);
            for (i, a) in u.iter().enumerate().skip(1) {
                assert!((a * a + &id).amax() < 1e-14);
                assert!((a.transpose() * a - &id).amax() < 1e-14);
                for b in &u[i + 1..] {
                    // anticommuting units
                    assert!((a * b + b * a).amax() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn family_sizes_match_rho() {
        for n in 1..=48 {
            let fam = build_invertible_space(n).unwrap();
            assert_eq!(fam.len(), rho(n).unwrap(), "n={n}");
            assert!(fam.iter().all(|m| m.nrows() == n && m.ncols() == n));
        }
    }

    #[test]
    fn random_combinations_are_orthogonal_multiples() {
        // every family here satisfies M^T M = |c|^2 I
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 4, 6, 8, 12, 16, 32, 48] {
            let fam = build_invertible_space(n).unwrap();
            let c: Vec<f64> = fam.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm2: f64 = c.iter().map(|v| v * v).sum();
            let m = fam.iter().zip(&c).fold(DMatrix::zeros(n, n), |acc, (f, w)| acc + f * *w);
            let err = (m.transpose() * &m - DMatrix::identity(n, n) * norm2).amax();
            assert!(err < 1e-12, "n={n} err={err}");
        }
    }
}
