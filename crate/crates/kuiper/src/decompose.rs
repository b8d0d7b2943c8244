//! `D + Sym grad Phi = sum a_i^2 xi_i (x) xi_i` on a grid.
//!
//! The field is first extended to a box padded by a quarter of the grid on
//! every side (a `C^3` reflection followed by a polynomial cutoff), the `L`
//! component is eliminated there with homogeneous boundary values, and the
//! result is restricted back. A constant shift along the frame then makes
//! all coefficients nonnegative.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{
    choose_l, load_or_find_frame, sym_pairs, FrameSearch, MatrixSpace, PrimitiveFrame,
};
use crate::elliptic::{EllipticSystem, SolveReport, SolverKind};
use crate::error::{Error, Result};
use crate::grid::{norms, sym_gradient, Grid, GridField, Rank};

/// Coefficients of the reflection
/// `f(-x) = 10 f(x) - 20 f(2x) + 15 f(3x) - 4 f(4x)`, which matches values
/// and the first three derivatives at `x = 0`.
const REFLECT: [(usize, f64); 4] = [(1, 10.0), (2, -20.0), (3, 15.0), (4, -4.0)];

/// `1` at `s = 0`, `0` for `s >= 1`, with three vanishing derivatives at both ends.
fn cutoff(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let s4 = s.powi(4);
        1.0 - s4 * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s * s * s)
    }
}

/// Removes the `L` component of symmetric fields on a fixed grid.
pub struct Eliminator {
    pub omega: Grid,
    pub pad: usize,
    pub system: EllipticSystem,
}

/// Output of [`Eliminator::eliminate`], restricted to the original grid.
#[derive(Clone, Debug)]
pub struct Elimination {
    pub phi: GridField,
    pub d_hat: GridField,
    /// `max_x |eta^T [D_hat(x)]|`.
    pub projection_residual: f64,
    pub report: SolveReport,
}

impl Eliminator {
    pub fn new(space: &MatrixSpace, omega: &Grid, kind: SolverKind) -> Result<Self> {
        Self::with_padding(space, omega, kind, 4)
    }

    /// Pads by `cells / divisor` nodes per side; `divisor` must be at least 3
    /// so the reflection stays inside the grid.
    pub fn with_padding(space: &MatrixSpace, omega: &Grid, kind: SolverKind, divisor: usize) -> Result<Self> {
        if divisor < 3 {
            return Err(Error::invalid("padding divisor must be at least 3"));
        }
        let cells = omega.shape().iter().copied().min().unwrap() - 1;
        let pad = cells / divisor;
        if pad == 0 {
            return Err(Error::invalid("grid too coarse to pad"));
        }
        let padded = omega.padded(pad);
        let system = EllipticSystem::assemble(space, &padded, kind)?;
        Ok(Eliminator { omega: omega.clone(), pad, system })
    }

    pub fn padded_grid(&self) -> &Grid {
        self.system.grid()
    }

    /// Extension of `f` to the padded box, vanishing on its boundary.
    pub fn extend(&self, f: &GridField) -> Result<GridField> {
        if f.grid != self.omega {
            return Err(Error::invalid("field does not live on the eliminator grid"));
        }
        let p = self.pad;
        let k = f.ncomp();
        let dim = self.omega.dim();
        let mut shape: Vec<usize> = self.omega.shape().to_vec();
        let mut data = f.values.clone();
        for axis in 0..dim {
            let m = shape[axis];
            let mut new_shape = shape.clone();
            new_shape[axis] = m + 2 * p;
            let outer: usize = shape[..axis].iter().product();
            let inner: usize = shape[axis + 1..].iter().product::<usize>() * k;
            let mut next = vec![0.0; outer * (m + 2 * p) * inner];
            for o in 0..outer {
                let src = |i: usize, c: usize| data[(o * m + i) * inner + c];
                for t in 0..m + 2 * p {
                    let dst = (o * (m + 2 * p) + t) * inner;
                    for c in 0..inner {
                        next[dst + c] = if t < p {
                            let d = p - t;
                            REFLECT.iter().map(|&(j, w)| w * src(j * d, c)).sum()
                        } else if t >= p + m {
                            let d = t - (p + m - 1);
                            REFLECT.iter().map(|&(j, w)| w * src(m - 1 - j * d, c)).sum()
                        } else {
                            src(t - p, c)
                        };
                    }
                }
            }
            data = next;
            shape = new_shape;
        }
        let grid = self.padded_grid().clone();
        let width = p as f64 * grid.h();
        let lo = self.omega.origin().to_vec();
        let hi: Vec<f64> = (0..dim).map(|a| lo[a] + (self.omega.shape()[a] - 1) as f64 * grid.h()).collect();
        for idx in 0..grid.len() {
            let x = grid.coord(idx);
            let chi: f64 = (0..dim)
                .map(|a| {
                    let out = (lo[a] - x[a]).max(x[a] - hi[a]).max(0.0);
                    cutoff(out / width)
                })
                .product();
            data[idx * k..(idx + 1) * k].iter_mut().for_each(|v| *v *= chi);
        }
        GridField::from_values(&grid, f.rank, data)
    }

    pub fn eliminate(&self, d: &GridField) -> Result<Elimination> {
        if d.rank != Rank::Sym {
            return Err(Error::invalid("eliminate expects a symmetric field"));
        }
        if !d.is_finite() {
            return Err(Error::NonFinite("input field"));
        }
        let ext = self.extend(d)?;
        let f = self.system.rhs(&ext)?;
        let (u, report) = self.system.solve(&f)?;
        let b = &self.system.b;
        let mut phi = b.apply_adjoint(&self.system.lift(&u));
        phi.iter_mut().for_each(|v| *v *= -2.0);
        let bphi = b.apply(&phi);
        let mut d_hat = ext;
        d_hat.values.iter_mut().zip(&bphi).for_each(|(a, b)| *a += 0.5 * b);
        let padded = self.padded_grid();
        let phi = GridField::from_values(padded, Rank::Vector, phi)?.restrict(&self.omega, self.pad);
        let d_hat = d_hat.restrict(&self.omega, self.pad);
        let proj = {
            let nsym = d_hat.ncomp();
            let eta = &self.system.eta;
            (0..self.omega.len())
                .map(|idx| {
                    let v = DVector::from_column_slice(&d_hat.values[idx * nsym..(idx + 1) * nsym]);
                    (eta.transpose() * v).norm()
                })
                .fold(0.0, f64::max)
        };
        Ok(Elimination { phi, d_hat, projection_residual: proj, report })
    }
}

/// Constant shift making the frame coefficients nonnegative.
#[derive(Clone, Debug)]
pub struct Shift {
    /// `Phi_hat(x) = M_hat x`.
    pub m_hat: DMatrix<f64>,
    pub phi_hat: GridField,
    /// `a_i^2`, one component per frame direction.
    pub a_sq: GridField,
    pub sigma0: f64,
}

/// With `a_hat` the frame coordinates of `d_hat`, sets
/// `sigma0 = inflation * max_i sup |a_hat_i|`, `a_i^2 = a_hat_i + 2 sigma0`
/// and `M_hat = 2 sigma0 sum xi_i (x) xi_i`, so that
/// `d_hat + Sym grad (M_hat x) = sum a_i^2 xi_i (x) xi_i`.
pub fn nonnegative_shift(d_hat: &GridField, frame: &PrimitiveFrame, inflation: f64) -> Result<Shift> {
    let grid = &d_hat.grid;
    let n = grid.dim();
    if frame.n != n || d_hat.rank != Rank::Sym {
        return Err(Error::invalid("frame and field dimensions disagree"));
    }
    if inflation < 1.0 {
        return Err(Error::invalid("shift inflation must be at least 1"));
    }
    let xi_n = frame.len();
    let nsym = d_hat.ncomp();
    let mut coords = vec![0.0; grid.len() * xi_n];
    for idx in 0..grid.len() {
        let c = frame.coordinates(&d_hat.values[idx * nsym..(idx + 1) * nsym]);
        coords[idx * xi_n..(idx + 1) * xi_n].copy_from_slice(&c);
    }
    let sigma0 = inflation * coords.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let a_sq = coords.iter().map(|a| a + 2.0 * sigma0).collect();
    let a_sq = GridField::from_values(grid, Rank::Tuple(xi_n), a_sq)?;
    let m_hat = frame.xi.iter().fold(DMatrix::zeros(n, n), |acc, x| acc + x * x.transpose()) * (2.0 * sigma0);
    let phi_hat = GridField::from_fn(grid, Rank::Vector, |x, o| {
        for i in 0..n {
            o[i] = (0..n).map(|j| m_hat[(i, j)] * x[j]).sum();
        }
    });
    Ok(Shift { m_hat, phi_hat, a_sq, sigma0 })
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub phi: GridField,
    /// `a_i^2` per frame direction.
    pub a_sq: GridField,
    pub xi: Vec<DVector<f64>>,
    pub sigma0: f64,
    pub projection_residual: f64,
    /// `max_x |D + Sym grad Phi - sum a_i^2 xi_i (x) xi_i|` with the grid's own differences.
    pub reconstruction_residual: f64,
    pub solve: SolveReport,
    /// `(sup |sum a^2 xi xi| + |Phi|_1) / sup |D|`.
    pub m1_ratio: f64,
}

impl Decomposition {
    pub fn min_coefficient(&self) -> f64 {
        self.a_sq.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `sum a_i^2 [xi_i (x) xi_i]` as a symmetric field.
    pub fn rank_one_sum(&self) -> GridField {
        let grid = &self.a_sq.grid;
        let n = grid.dim();
        let pairs = sym_pairs(n);
        let k = self.xi.len();
        let mut out = GridField::zeros(grid, Rank::Sym);
        let nsym = out.ncomp();
        for idx in 0..grid.len() {
            let a = &self.a_sq.values[idx * k..(idx + 1) * k];
            for (s, (i, j)) in pairs.iter().enumerate() {
                out.values[idx * nsym + s] = a.iter().zip(&self.xi).map(|(w, x)| w * x[*i] * x[*j]).sum();
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct DecomposeOptions {
    pub solver: SolverKind,
    /// The padded box adds `cells / pad_divisor` nodes per side.
    pub pad_divisor: usize,
    /// Safety factor on the shift `sigma0`.
    pub inflation: f64,
    pub frame_cache: Option<std::path::PathBuf>,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions { solver: SolverKind::Auto, pad_divisor: 4, inflation: 1.05, frame_cache: None }
    }
}

/// Eliminator and frame for one dimension and grid, reusable across calls.
pub struct Decomposer {
    pub space: MatrixSpace,
    pub frame: PrimitiveFrame,
    pub eliminator: Eliminator,
    pub inflation: f64,
}

impl Decomposer {
    pub fn new(grid: &Grid, opts: &DecomposeOptions) -> Result<Self> {
        let space = choose_l(grid.dim())?;
        let frame = load_or_find_frame(&space, opts.frame_cache.as_deref(), &FrameSearch::default())?;
        let eliminator = Eliminator::with_padding(&space, grid, opts.solver, opts.pad_divisor)?;
        Ok(Decomposer { space, frame, eliminator, inflation: opts.inflation })
    }

    pub fn decompose(&self, d: &GridField) -> Result<Decomposition> {
        let elim = self.eliminator.eliminate(d)?;
        let shift = nonnegative_shift(&elim.d_hat, &self.frame, self.inflation)?;
        let mut phi = elim.phi;
        phi.axpy(1.0, &shift.phi_hat)?;
        let mut dec = Decomposition {
            phi,
            a_sq: shift.a_sq,
            xi: self.frame.xi.clone(),
            sigma0: shift.sigma0,
            projection_residual: elim.projection_residual,
            reconstruction_residual: 0.0,
            solve: elim.report,
            m1_ratio: 0.0,
        };
        let sum = dec.rank_one_sum();
        let mut resid = d.clone();
        resid.axpy(1.0, &sym_gradient(&dec.phi)?)?;
        resid.axpy(-1.0, &sum)?;
        dec.reconstruction_residual = resid.sup_norm();
        let dn = d.sup_norm();
        dec.m1_ratio = if dn > 0.0 { (sum.sup_norm() + norms(&dec.phi).c1) / dn } else { 0.0 };
        Ok(dec)
    }
}

/// One-shot decomposition of a symmetric field on a unit grid.
pub fn decompose(d: &GridField) -> Result<Decomposition> {
    Decomposer::new(&d.grid, &DecomposeOptions::default())?.decompose(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::smooth_random_field;

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.0), 1.0);
        assert!(cutoff(1.0).abs() < 1e-12);
        assert!((cutoff(0.5) - 0.5).abs() < 1e-12);
        let d = |s: f64| (cutoff(s + 1e-6) - cutoff(s - 1e-6)) / 2e-6;
        assert!(d(1e-3).abs() < 1e-6 && d(1.0 - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn extension_reproduces_quadratics_near_faces() {
        let g = Grid::unit(2, 17).unwrap();
        let e = Eliminator::new(&choose_l(2).unwrap(), &g, SolverKind::Direct).unwrap();
        let f = GridField::from_fn(&g, Rank::Scalar, |x, o| o[0] = 1.0 + x[0] - 2.0 * x[1] * x[1]);
        let ext = e.extend(&f).unwrap();
        let pg = e.padded_grid();
        // one node outside a face, where the cutoff is still almost one
        let idx = pg.index(&[e.pad - 1, e.pad + 5]);
        let x = pg.coord(idx);
        let exact = 1.0 + x[0] - 2.0 * x[1] * x[1];
        let chi = cutoff(1.0 / e.pad as f64);
        assert!((ext.values[idx] - chi * exact).abs() < 1e-12);
        let last = pg.index(&[0, e.pad + 5]);
        assert_eq!(ext.values[last], 0.0);
    }

    #[test]
    fn coordinate_field_decomposes_exactly() {
        let g = Grid::unit(2, 33).unwrap();
        let d = GridField::from_fn(&g, Rank::Sym, |_, o| o.copy_from_slice(&[0.0, 1.0, 0.0]));
        let dec = decompose(&d).unwrap();
        assert!(dec.projection_residual < 1e-12);
        assert!(dec.reconstruction_residual < 1e-10);
        assert!(dec.min_coefficient() >= 0.0);
    }

    #[test]
    fn shift_example_without_inflation() {
        let g = Grid::unit(3, 9).unwrap();
        let l = choose_l(3).unwrap();
        let frame = crate::algebra::find_primitive_frame(&l, &FrameSearch::default()).unwrap();
        let x = &frame.xi[0];
        let d = GridField::from_fn(&g, Rank::Sym, |_, o| {
            for (s, (i, j)) in sym_pairs(3).into_iter().enumerate() {
                o[s] = x[i] * x[j];
            }
        });
        let s = nonnegative_shift(&d, &frame, 1.0).unwrap();
        assert!((s.sigma0 - 1.0).abs() < 1e-10);
        let a = s.a_sq.at(0);
        assert!((a[0] - 3.0).abs() < 1e-10);
        assert!(a[1..].iter().all(|v| (v - 2.0).abs() < 1e-10));
    }

    #[test]
    fn generic_field_residuals() {
        let g = Grid::unit(2, 33).unwrap();
        let d = smooth_random_field(&g, Rank::Sym, 4, 9);
        let dec = decompose(&d).unwrap();
        assert!(dec.projection_residual < 1e-8);
        assert!(dec.reconstruction_residual < 5e-2 * d.sup_norm());
        assert!(dec.min_coefficient() >= 0.0);
    }
}
