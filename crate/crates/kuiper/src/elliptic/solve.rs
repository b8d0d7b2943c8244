use std::fmt;
use std::io::Write;
use std::path::Path;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::fastdiag::FastDiagonal;
use super::operator::BOperator;
use crate::algebra::{certify_invertible, sym_pairs, CertifyOptions, MatrixSpace};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, Rank};
use crate::sparse::Csr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolverKind {
    /// Sparse Cholesky for moderate sizes, conjugate gradients beyond.
    #[default]
    Auto,
    Direct,
    ConjugateGradient,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub method: &'static str,
    pub iterations: usize,
    /// `|K u - f| / |f|` in the Euclidean norm.
    pub relative_residual: f64,
    /// `max |u| / max |f|`.
    pub amplification: f64,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} it), residual {:.2e}, amplification {:.2e}",
            self.method, self.iterations, self.relative_residual, self.amplification
        )
    }
}

enum Preconditioner {
    Jacobi(Vec<f64>),
    Separable(FastDiagonal),
}

impl Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Jacobi(diag) => {
                z.par_iter_mut().zip(r).zip(diag).for_each(|((zi, ri), di)| *zi = ri / di)
            }
            Preconditioner::Separable(fd) => z.copy_from_slice(&fd.solve(r)),
        }
    }
}

enum Backend {
    Direct(Llt<usize, f64>),
    Iterative(Preconditioner),
}

/// `K = P^T eta^T B B* eta P` on the interior nodes of a grid, factored or
/// prepared for iteration.
pub struct EllipticSystem {
    pub b: BOperator,
    /// Orthonormal vector forms of the generators of `L`, one per column.
    pub eta: DMatrix<f64>,
    /// Doubled matrices of the columns of `eta`.
    pub doubled: Vec<DMatrix<f64>>,
    /// Legendre-Hadamard constant: squared invertibility margin of `L`.
    pub lh_constant: f64,
    interior: Vec<usize>,
    /// Nonzero `(j, i, a, (C_j)_(ia))`.
    terms: Vec<(usize, usize, usize, f64)>,
    backend: Backend,
    /// Conjugate gradients stop once `max |K u - f| <= tolerance * max |f|`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

const DIRECT_LIMIT_2D: usize = 200_000;
const DIRECT_LIMIT_3D: usize = 40_000;

impl EllipticSystem {
    pub fn assemble(space: &MatrixSpace, grid: &Grid, kind: SolverKind) -> Result<Self> {
        if space.n != grid.dim() {
            return Err(Error::invalid(format!(
                "space is {}-dimensional but the grid is {}-dimensional",
                space.n,
                grid.dim()
            )));
        }
        let eta = space.eta()?;
        let doubled = space.orthonormal_doubled()?;
        let margin = match space.margin {
            Some(m) => m,
            None => certify_invertible(space, &CertifyOptions::default())?,
        };
        let b = BOperator::new(grid);
        let interior: Vec<usize> = (0..grid.len()).filter(|&i| !grid.is_boundary(i)).collect();
        let unknowns = interior.len() * eta.ncols();
        let direct = match kind {
            SolverKind::Direct => true,
            SolverKind::ConjugateGradient => false,
            SolverKind::Auto => {
                unknowns <= if grid.dim() <= 2 { DIRECT_LIMIT_2D } else { DIRECT_LIMIT_3D }
            }
        };
        let mut terms = Vec::new();
        for (j, c) in doubled.iter().enumerate() {
            for i in 0..grid.dim() {
                for a in 0..grid.dim() {
                    if c[(i, a)] != 0.0 {
                        terms.push((j, i, a, c[(i, a)]));
                    }
                }
            }
        }
        let mut sys = EllipticSystem {
            terms,
            b,
            eta,
            doubled,
            lh_constant: margin * margin,
            interior,
            backend: Backend::Iterative(Preconditioner::Jacobi(Vec::new())),
            tolerance: 1e-11,
            max_iterations: 50_000,
        };
        let separable = sys.doubled.len() == 1 && {
            let c = &sys.doubled[0];
            (0..c.nrows()).all(|i| (0..c.ncols()).all(|j| i == j || c[(i, j)] == 0.0))
        };
        if separable && !matches!(kind, SolverKind::Direct) {
            let c: Vec<f64> = (0..grid.dim()).map(|i| sys.doubled[0][(i, i)]).collect();
            let fd = FastDiagonal::new(grid, &c, &sys.interior);
            sys.backend = Backend::Iterative(Preconditioner::Separable(fd));
            return Ok(sys);
        }
        let r = sys.restricted_rows();
        if direct {
            let k = sys.weighted(&r);
            let trip: Vec<Triplet<usize, usize, f64>> = (0..k.nrows)
                .flat_map(|row| k.row(row).filter(move |e| e.0 <= row).map(move |(c, v)| Triplet::new(row, c, v)))
                .collect();
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(k.nrows, k.nrows, &trip)
                .map_err(|e| Error::Solver(format!("{e:?}")))?;
            let llt = mat
                .sp_cholesky(Side::Lower)
                .map_err(|e| Error::Solver(format!("cholesky: {e:?}")))?;
            sys.backend = Backend::Direct(llt);
        } else {
            let w = sys.b.weights();
            let n = grid.dim();
            let diag = (0..r.nrows)
                .map(|row| r.row(row).map(|(c, v)| v * v / w[c / n]).sum())
                .collect();
            sys.backend = Backend::Iterative(Preconditioner::Jacobi(diag));
        }
        Ok(sys)
    }

    pub fn grid(&self) -> &Grid {
        &self.b.grid
    }

    pub fn dim_l(&self) -> usize {
        self.eta.ncols()
    }

    pub fn unknowns(&self) -> usize {
        self.interior.len() * self.dim_l()
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn method(&self) -> &'static str {
        match self.backend {
            Backend::Direct(_) => "cholesky",
            Backend::Iterative(Preconditioner::Jacobi(_)) => "pcg",
            Backend::Iterative(Preconditioner::Separable(_)) => "fast-diagonal",
        }
    }

    /// Rows of `P^T eta^T B`, unknowns ordered node-major.
    fn restricted_rows(&self) -> Csr {
        let n = self.grid().dim();
        let d = self.dim_l();
        let pairs = sym_pairs(n);
        let mut trip = Vec::new();
        for (m, &node) in self.interior.iter().enumerate() {
            let rows: Vec<Vec<(usize, f64)>> =
                pairs.iter().map(|&(i, j)| self.b.row_entries(node, i, j)).collect();
            for j in 0..d {
                for (k, entries) in rows.iter().enumerate() {
                    let e = self.eta[(k, j)];
                    if e != 0.0 {
                        trip.extend(entries.iter().map(|&(c, v)| (m * d + j, c, e * v)));
                    }
                }
            }
        }
        Csr::from_triplets(self.interior.len() * d, self.grid().len() * n, &trip)
    }

    fn weighted(&self, r: &Csr) -> Csr {
        let n = self.grid().dim();
        let w = self.b.weights();
        let winv: Vec<f64> = (0..r.ncols).map(|c| 1.0 / w[c / n]).collect();
        r.weighted_gram(&winv)
    }

    /// Assembled `K`, for inspection and tests.
    pub fn matrix(&self) -> Csr {
        self.weighted(&self.restricted_rows())
    }

    /// Writes `K` as `row col value` lines.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let k = self.matrix();
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "# {} {} {}", k.nrows, k.ncols, k.nnz())?;
        for r in 0..k.nrows {
            for (c, v) in k.row(r) {
                writeln!(f, "{r} {c} {v:e}")?;
            }
        }
        Ok(())
    }

    /// `eta u` as a symmetric field, zero on the boundary.
    pub fn lift(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid().dim();
        let nsym = n * (n + 1) / 2;
        let d = self.dim_l();
        let mut g = vec![0.0; self.grid().len() * nsym];
        for (m, &node) in self.interior.iter().enumerate() {
            for k in 0..nsym {
                g[node * nsym + k] = (0..d).map(|j| self.eta[(k, j)] * u[m * d + j]).sum();
            }
        }
        g
    }

    /// `P^T eta^T s` for a symmetric field `s` given node-major.
    pub fn project(&self, s: &[f64]) -> Vec<f64> {
        let n = self.grid().dim();
        let nsym = n * (n + 1) / 2;
        let d = self.dim_l();
        let mut out = vec![0.0; self.interior.len() * d];
        out.par_chunks_mut(d).zip(self.interior.par_iter()).for_each(|(o, &node)| {
            let sv = &s[node * nsym..(node + 1) * nsym];
            for j in 0..d {
                o[j] = (0..nsym).map(|k| self.eta[(k, j)] * sv[k]).sum();
            }
        });
        out
    }

    /// Matrix-free `K u`.
    ///
    /// Because `u` vanishes on the boundary only central differences are
    /// involved: `Phi_i = -H^-1 sum_(j,a) (C_j)_(ia) d_a u_j` with `u`
    /// extended by zero, then `(K u)_j = sum_(i,a) (C_j)_(ia) d_a Phi_i`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let grid = self.grid();
        let n = grid.dim();
        let d = self.dim_l();
        let strides = grid.strides();
        let inv = self.b.inv2h();
        let w = self.b.weights();
        let terms = &self.terms;
        let mut uf = vec![0.0; grid.len() * d];
        for (m, &node) in self.interior.iter().enumerate() {
            uf[node * d..(node + 1) * d].copy_from_slice(&u[m * d..(m + 1) * d]);
        }
        let mut phi = vec![0.0; grid.len() * n];
        phi.par_chunks_mut(n).enumerate().for_each(|(node, o)| {
            for &(j, i, a, cf) in terms {
                let s = strides[a];
                let cls = self.b.class(node, a);
                let lo = if cls == 0 { 0.0 } else { uf[(node - s) * d + j] };
                let hi = if cls == 2 { 0.0 } else { uf[(node + s) * d + j] };
                o[i] += cf * (lo - hi) * inv;
            }
            let wi = 1.0 / w[node];
            o.iter_mut().for_each(|v| *v *= wi);
        });
        let mut out = vec![0.0; self.interior.len() * d];
        out.par_chunks_mut(d).zip(self.interior.par_iter()).for_each(|(o, &node)| {
            for &(j, i, a, cf) in terms {
                let s = strides[a];
                o[j] += cf * (phi[(node + s) * n + i] - phi[(node - s) * n + i]) * inv;
            }
        });
        out
    }

    /// Right hand side `P^T eta^T [D]`.
    pub fn rhs(&self, d: &GridField) -> Result<Vec<f64>> {
        if d.rank != Rank::Sym || &d.grid != self.grid() {
            return Err(Error::invalid("rhs needs a symmetric field on the system grid"));
        }
        Ok(self.project(&d.values))
    }

    pub fn solve(&self, f: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        if f.len() != self.unknowns() {
            return Err(Error::invalid("right hand side has the wrong length"));
        }
        let fnorm = norm(f);
        let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if fnorm == 0.0 {
            let report = SolveReport { method: self.method(), iterations: 0, relative_residual: 0.0, amplification: 0.0 };
            return Ok((vec![0.0; f.len()], report));
        }
        let (u, iterations) = match &self.backend {
            Backend::Direct(llt) => {
                let rhs = Mat::<f64>::from_fn(f.len(), 1, |i, _| f[i]);
                let sol = llt.solve(&rhs);
                let mut u: Vec<f64> = (0..f.len()).map(|i| sol[(i, 0)]).collect();
                // one step of iterative refinement
                let r: Vec<f64> = f.iter().zip(self.apply(&u)).map(|(a, b)| a - b).collect();
                let rm = Mat::<f64>::from_fn(f.len(), 1, |i, _| r[i]);
                let du = llt.solve(&rm);
                u.iter_mut().enumerate().for_each(|(i, v)| *v += du[(i, 0)]);
                (u, 1)
            }
            Backend::Iterative(pre) => self.pcg(f, pre)?,
        };
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("elliptic solution"));
        }
        let r: Vec<f64> = f.iter().zip(self.apply(&u)).map(|(a, b)| a - b).collect();
        let relative_residual = norm(&r) / fnorm;
        let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let report = SolveReport { method: self.method(), iterations, relative_residual, amplification: umax / fmax };
        Ok((u, report))
    }

    fn pcg(&self, f: &[f64], pre: &Preconditioner) -> Result<(Vec<f64>, usize)> {
        let fnorm = norm(f);
        let fmax = amax(f);
        let mut x = vec![0.0; f.len()];
        let mut r = f.to_vec();
        let mut z = vec![0.0; f.len()];
        pre.apply(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 1..=self.max_iterations {
            let kp = self.apply(&p);
            let alpha = rz / dot(&p, &kp);
            x.par_iter_mut().zip(&p).for_each(|(a, b)| *a += alpha * b);
            r.par_iter_mut().zip(&kp).for_each(|(a, b)| *a -= alpha * b);
            if amax(&r) <= self.tolerance * fmax {
                return Ok((x, it));
            }
            pre.apply(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        Err(Error::NotConverged { iterations: self.max_iterations, residual: norm(&r) / fnorm })
    }

    /// Principal symbol `[xi^T C_j C_k xi]`.
    pub fn symbol(&self, xi: &[f64]) -> DMatrix<f64> {
        let x = DVector::from_column_slice(xi);
        let cx: Vec<DVector<f64>> = self.doubled.iter().map(|c| c * &x).collect();
        let d = cx.len();
        DMatrix::from_fn(d, d, |j, k| cx[j].dot(&cx[k]))
    }
}

/// Fixed-size chunks keep the summation order independent of the thread count.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> =
        a.par_chunks(4096).zip(b.par_chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum()).collect();
    partial.iter().sum()
}

fn amax(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::choose_l;

    #[test]
    fn assembled_matches_matrix_free_and_is_symmetric() {
        for n in [2, 3] {
            let g = Grid::unit(n, 7).unwrap();
            let sys = EllipticSystem::assemble(&choose_l(n).unwrap(), &g, SolverKind::Direct).unwrap();
            let k = sys.matrix();
            let u: Vec<f64> = (0..sys.unknowns()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            let a = k.matvec(&u);
            let b = sys.apply(&u);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-8 * x.abs().max(1.0));
            }
            let kt = k.transpose();
            for r in 0..k.nrows {
                let row: Vec<_> = k.row(r).collect();
                let col: Vec<_> = kt.row(r).collect();
                assert_eq!(row.len(), col.len());
                for (p, q) in row.iter().zip(&col) {
                    assert_eq!(p.0, q.0);
                    assert!((p.1 - q.1).abs() < 1e-9 * p.1.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn direct_and_iterative_agree() {
        let g = Grid::unit(2, 17).unwrap();
        let l = choose_l(2).unwrap();
        let d = EllipticSystem::assemble(&l, &g, SolverKind::Direct).unwrap();
        let c = EllipticSystem::assemble(&l, &g, SolverKind::ConjugateGradient).unwrap();
        let f = vec![1.0; d.unknowns()];
        let (ud, rd) = d.solve(&f).unwrap();
        let (uc, rc) = c.solve(&f).unwrap();
        assert!(rd.relative_residual < 1e-12 && rc.relative_residual < 1e-11);
        let diff = ud.iter().zip(&uc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8 * ud.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn separable_solver_matches_cholesky() {
        let g = Grid::unit(3, 12).unwrap();
        let l = choose_l(3).unwrap();
        let d = EllipticSystem::assemble(&l, &g, SolverKind::Direct).unwrap();
        let c = EllipticSystem::assemble(&l, &g, SolverKind::ConjugateGradient).unwrap();
        assert_eq!(c.method(), "fast-diagonal");
        let f: Vec<f64> = (0..d.unknowns()).map(|i| ((i * 31) % 17) as f64 - 8.0).collect();
        let (ud, _) = d.solve(&f).unwrap();
        let (uc, rc) = c.solve(&f).unwrap();
        assert!(rc.iterations <= 2, "{} iterations", rc.iterations);
        let diff = ud.iter().zip(&uc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10 * ud.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn symbol_is_positive_definite() {
        let g = Grid::unit(3, 5).unwrap();
        let sys = EllipticSystem::assemble(&choose_l(3).unwrap(), &g, SolverKind::Direct).unwrap();
        let s = sys.symbol(&[0.6, 0.0, -0.8]);
        let min = s.symmetric_eigenvalues().min();
        assert!(min >= sys.lh_constant - 1e-9, "{min} < {}", sys.lh_constant);
    }
}
