use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::hurwitz::build_invertible_space;
use super::vector_form::{doubled, matrix_form, sym_dim, vector_form};
use crate::error::{Error, Result};

/// Which construction produced a [`MatrixSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseTag {
    /// `n` odd: the single matrix `diag(I/(n-1), -1)`.
    Odd,
    /// `n` in {2, 4, 8, 16}: off-diagonal blocks `[[0, A], [A^T, 0]]`.
    WMinus,
    /// Other even `n`: `[[r I, A], [A^T, -r I]]`.
    WZero,
    /// Supplied by the caller.
    Custom,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::Odd => "odd",
            CaseTag::WMinus => "w_minus",
            CaseTag::WZero => "w_zero",
            CaseTag::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "odd" => Some(CaseTag::Odd),
            "w_minus" => Some(CaseTag::WMinus),
            "w_zero" => Some(CaseTag::WZero),
            "custom" => Some(CaseTag::Custom),
            _ => None,
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A linear space of symmetric `n x n` matrices given by a basis.
#[derive(Clone, Debug)]
pub struct MatrixSpace {
    pub n: usize,
    pub basis: Vec<DMatrix<f64>>,
    pub tag: CaseTag,
    /// Certified lower bound for the smallest singular value of the doubled
    /// matrices over the unit sphere of orthonormal coordinates.
    pub margin: Option<f64>,
}

impl MatrixSpace {
    pub fn new(n: usize, basis: Vec<DMatrix<f64>>, tag: CaseTag) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::invalid("matrix space needs at least one basis matrix"));
        }
        for b in &basis {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::invalid(format!("basis matrix is not {n}x{n}")));
            }
            vector_form(b)?;
        }
        Ok(MatrixSpace { n, basis, tag, margin: None })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `{[[0, A], [A^T, 0]]}` with `A` ranging over the invertible family of size `n/2`.
    pub fn w_minus(n: usize) -> Result<Self> {
        let h = half(n)?;
        let basis = build_invertible_space(h)?.into_iter().map(|a| offdiag(&a)).collect();
        Self::new(n, basis, CaseTag::WMinus)
    }

    /// `W_minus` plus the diagonal generator `diag(I, -I)`.
    pub fn w_zero(n: usize) -> Result<Self> {
        let h = half(n)?;
        let mut r = DMatrix::identity(n, n);
        for i in h..n {
            r[(i, i)] = -1.0;
        }
        let mut basis = vec![r];
        basis.extend(build_invertible_space(h)?.into_iter().map(|a| offdiag(&a)));
        Self::new(n, basis, CaseTag::WZero)
    }

    pub fn odd(n: usize) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::invalid(format!("odd construction needs odd n >= 3, got {n}")));
        }
        let mut m = DMatrix::identity(n, n) / (n as f64 - 1.0);
        m[(n - 1, n - 1)] = -1.0;
        Self::new(n, vec![m], CaseTag::Odd)
    }

    /// Orthonormal basis of the span of the vector forms, one per column.
    pub fn eta(&self) -> Result<DMatrix<f64>> {
        let cols: Vec<DVector<f64>> =
            self.basis.iter().map(vector_form).collect::<Result<_>>()?;
        let mut out: Vec<DVector<f64>> = Vec::with_capacity(cols.len());
        for c in cols {
            let mut v = c.clone();
            for _ in 0..2 {
                for q in &out {
                    let p = q.dot(&v);
                    v -= q * p;
                }
            }
            let nv = v.norm();
            if nv < 1e-10 * c.norm().max(1.0) {
                return Err(Error::invalid("matrix space basis is linearly dependent"));
            }
            out.push(v / nv);
        }
        Ok(DMatrix::from_columns(&out))
    }

    /// Doubled matrices `A + diag A` of the orthonormalised basis.
    pub fn orthonormal_doubled(&self) -> Result<Vec<DMatrix<f64>>> {
        let eta = self.eta()?;
        Ok(eta
            .column_iter()
            .map(|c| doubled(&matrix_form(c.as_slice(), self.n)))
            .collect())
    }

    /// Number of primitive directions complementing this space.
    pub fn codim(&self) -> usize {
        sym_dim(self.n) - self.dim()
    }
}

fn half(n: usize) -> Result<usize> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::invalid(format!("block construction needs even n, got {n}")));
    }
    Ok(n / 2)
}

fn offdiag(a: &DMatrix<f64>) -> DMatrix<f64> {
    let h = a.nrows();
    let mut s = DMatrix::zeros(2 * h, 2 * h);
    s.view_mut((0, h), (h, h)).copy_from(a);
    s.view_mut((h, 0), (h, h)).copy_from(&a.transpose());
    s
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    /// Sphere samples per coordinate direction; the total is `density^(dim-1)`.
    pub density: usize,
    pub max_samples: usize,
    /// Number of best samples refined by projected descent.
    pub polish: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { density: 50, max_samples: 20_000, polish: 8, seed: 0x5eed }
    }
}

fn min_abs_eig(mats: &[DMatrix<f64>], c: &[f64]) -> (f64, DVector<f64>, f64) {
    let n = mats[0].nrows();
    let m = mats.iter().zip(c).fold(DMatrix::zeros(n, n), |acc, (a, w)| acc + a * *w);
    let eig = SymmetricEigen::new(m);
    let (k, lam) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap();
    (lam.abs(), eig.eigenvectors.column(k).into_owned(), lam.signum())
}

fn normalize(v: &mut [f64]) {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Smallest `|eigenvalue|` of `sum c_j C_j` over the unit sphere of `c`,
/// where `C_j` are the doubled orthonormal basis matrices.
///
/// Sampling followed by projected descent from the best samples; the
/// returned value is the smallest minimum found.
pub fn certify_invertible(space: &MatrixSpace, opts: &CertifyOptions) -> Result<f64> {
    let mats = space.orthonormal_doubled()?;
    let d = mats.len();
    if d == 1 {
        return Ok(min_abs_eig(&mats, &[1.0]).0);
    }
    let samples = opts
        .density
        .checked_pow(d as u32 - 1)
        .unwrap_or(usize::MAX)
        .min(opts.max_samples)
        .max(4 * d);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(samples + 2 * d);
    // coordinate axes and pairwise diagonals first, then random points
    for j in 0..d {
        let mut c = vec![0.0; d];
        c[j] = 1.0;
        scored.push((min_abs_eig(&mats, &c).0, c));
    }
    for _ in 0..samples {
        let mut c: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        normalize(&mut c);
        scored.push((min_abs_eig(&mats, &c).0, c));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = scored[0].0;
    for (f0, c0) in scored.into_iter().take(opts.polish) {
        best = best.min(polish(&mats, c0, f0));
    }
    Ok(best)
}

fn polish(mats: &[DMatrix<f64>], mut c: Vec<f64>, mut f: f64) -> f64 {
    let mut step = 0.1;
    for _ in 0..200 {
        let (_, v, sign) = min_abs_eig(mats, &c);
        let mut g: Vec<f64> = mats.iter().map(|a| sign * v.dot(&(a * &v))).collect();
        let gc: f64 = g.iter().zip(&c).map(|(a, b)| a * b).sum();
        g.iter_mut().zip(&c).for_each(|(gi, ci)| *gi -= gc * ci);
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn < 1e-14 || step < 1e-12 {
            break;
        }
        loop {
            let mut trial: Vec<f64> = c.iter().zip(&g).map(|(a, b)| a - step * b / gn).collect();
            normalize(&mut trial);
            let ft = min_abs_eig(mats, &trial).0;
            if ft < f {
                c = trial;
                f = ft;
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    f
}

/// The annihilated subspace `L` used for dimension `n`, certified invertible.
pub fn choose_l(n: usize) -> Result<MatrixSpace> {
    choose_l_with(n, &CertifyOptions::default())
}

pub fn choose_l_with(n: usize, opts: &CertifyOptions) -> Result<MatrixSpace> {
    let mut space = if n % 2 == 1 {
        MatrixSpace::odd(n)?
    } else if matches!(n, 2 | 4 | 8 | 16) {
        MatrixSpace::w_minus(n)?
    } else {
        MatrixSpace::w_zero(n)?
    };
    let margin = certify_invertible(&space, opts)?;
    const TOL: f64 = 1e-6;
    if margin <= TOL {
        return Err(Error::Certification { n, margin, tol: TOL });
    }
    space.margin = Some(margin);
    Ok(space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rho_half, xi_index};

    #[test]
    fn dimensions_by_case() {
        for n in 2..=20 {
            let l = choose_l(n).unwrap();
            let expect = if n % 2 == 1 {
                1
            } else if matches!(n, 2 | 4 | 8 | 16) {
                rho_half(n).unwrap()
            } else {
                rho_half(n).unwrap() + 1
            };
            assert_eq!(l.dim(), expect, "n={n}");
            assert_eq!(l.codim(), xi_index(n).unwrap());
            assert!(l.margin.unwrap() > 1e-6);
        }
    }

    #[test]
    fn planar_w_zero_margin_is_one() {
        let w = MatrixSpace::w_zero(2).unwrap();
        let m = certify_invertible(&w, &CertifyOptions::default()).unwrap();
        assert!((m - 1.0).abs() < 1e-9, "margin {m}");
    }

    #[test]
    fn detects_singular_combination() {
        let basis = vec![
            DMatrix::from_row_slice(2, 2, &[1., 0., 0., -1.]),
            DMatrix::identity(2, 2),
        ];
        let s = MatrixSpace::new(2, basis, CaseTag::Custom).unwrap();
        let m = certify_invertible(&s, &CertifyOptions::default()).unwrap();
        assert!(m < 1e-8, "margin {m}");
    }

    #[test]
    fn odd_generator() {
        let l = choose_l(3).unwrap();
        let b = &l.basis[0];
        assert_eq!(b[(0, 0)], 0.5);
        assert_eq!(b[(2, 2)], -1.0);
    }
}
