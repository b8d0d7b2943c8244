//! Second order finite differences: central in the interior, one-sided
//! three point formulas on the boundary.

use super::{Grid, GridField, Rank};
use crate::algebra::sym_index;
use crate::error::{Error, Result};

/// `d f / d x_axis` for a scalar node array.
pub fn deriv_axis(grid: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let s = grid.strides()[axis];
    let m = grid.shape()[axis];
    let inv = 1.0 / (2.0 * grid.h());
    let mut out = vec![0.0; f.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = grid.axis_index(idx, axis);
        *o = if i == 0 {
            (-3.0 * f[idx] + 4.0 * f[idx + s] - f[idx + 2 * s]) * inv
        } else if i + 1 == m {
            (3.0 * f[idx] - 4.0 * f[idx - s] + f[idx - 2 * s]) * inv
        } else {
            (f[idx + s] - f[idx - s]) * inv
        };
    }
    out
}

/// `d^2 f / d x_axis^2`: three point stencil inside, four point one-sided
/// stencil on the boundary.
pub fn second_deriv_axis(grid: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let s = grid.strides()[axis];
    let m = grid.shape()[axis];
    let inv = 1.0 / (grid.h() * grid.h());
    let mut out = vec![0.0; f.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = grid.axis_index(idx, axis);
        *o = if i == 0 {
            (2.0 * f[idx] - 5.0 * f[idx + s] + 4.0 * f[idx + 2 * s] - f[idx + 3 * s]) * inv
        } else if i + 1 == m {
            (2.0 * f[idx] - 5.0 * f[idx - s] + 4.0 * f[idx - 2 * s] - f[idx - 3 * s]) * inv
        } else {
            (f[idx + s] - 2.0 * f[idx] + f[idx - s]) * inv
        };
    }
    out
}

fn expect_rank(f: &GridField, rank: Rank, what: &str) -> Result<()> {
    if f.rank != rank {
        return Err(Error::invalid(format!("{what} expects a {rank:?} field, got {:?}", f.rank)));
    }
    Ok(())
}

pub fn gradient(f: &GridField) -> Result<GridField> {
    expect_rank(f, Rank::Scalar, "gradient")?;
    let g = &f.grid;
    let comps: Vec<Vec<f64>> = (0..g.dim()).map(|a| deriv_axis(g, &f.values, a)).collect();
    GridField::from_components(g, Rank::Vector, &comps)
}

/// Symmetric gradient `1/2 (grad Phi + grad Phi^T)` in vector form.
pub fn sym_gradient(phi: &GridField) -> Result<GridField> {
    expect_rank(phi, Rank::Vector, "sym_gradient")?;
    let g = &phi.grid;
    let n = g.dim();
    let comps = phi.components();
    // jac[i][j] = d_j Phi_i
    let jac: Vec<Vec<Vec<f64>>> =
        comps.iter().map(|c| (0..n).map(|a| deriv_axis(g, c, a)).collect()).collect();
    let mut out = vec![Vec::new(); n * (n + 1) / 2];
    for i in 0..n {
        for j in i..n {
            let k = sym_index(n, i, j);
            out[k] = jac[i][j].iter().zip(&jac[j][i]).map(|(a, b)| 0.5 * (a + b)).collect();
        }
    }
    GridField::from_components(g, Rank::Sym, &out)
}

/// `1/2 grad v (x) grad v` in vector form.
pub fn outer_gradient(v: &GridField) -> Result<GridField> {
    let grad = gradient(v)?;
    let n = v.grid.dim();
    let k = n * (n + 1) / 2;
    let mut out = GridField::zeros(&v.grid, Rank::Sym);
    for idx in 0..v.grid.len() {
        let gv = grad.at(idx);
        let o = &mut out.values[idx * k..(idx + 1) * k];
        for i in 0..n {
            for j in i..n {
                o[sym_index(n, i, j)] = 0.5 * gv[i] * gv[j];
            }
        }
    }
    Ok(out)
}

/// Hessian of a scalar field in vector form.
pub fn hessian(f: &GridField) -> Result<GridField> {
    expect_rank(f, Rank::Scalar, "hessian")?;
    let g = &f.grid;
    let n = g.dim();
    let first: Vec<Vec<f64>> = (0..n).map(|a| deriv_axis(g, &f.values, a)).collect();
    let mut out = vec![Vec::new(); n * (n + 1) / 2];
    for i in 0..n {
        out[sym_index(n, i, i)] = second_deriv_axis(g, &f.values, i);
        for j in i + 1..n {
            let a = deriv_axis(g, &first[i], j);
            let b = deriv_axis(g, &first[j], i);
            out[sym_index(n, i, j)] = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        }
    }
    GridField::from_components(g, Rank::Sym, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quadratics() {
        let g = Grid::unit(2, 9).unwrap();
        let f = GridField::from_fn(&g, Rank::Scalar, |x, o| o[0] = 3.0 * x[0] * x[0] - x[0] * x[1] + 2.0 * x[1]);
        let grad = gradient(&f).unwrap();
        let hess = hessian(&f).unwrap();
        for idx in 0..g.len() {
            let x = g.coord(idx);
            assert!((grad.at(idx)[0] - (6.0 * x[0] - x[1])).abs() < 1e-12);
            assert!((grad.at(idx)[1] - (2.0 - x[0])).abs() < 1e-12);
            let h = hess.at(idx);
            assert!((h[0] + 1.0).abs() < 1e-10 && (h[1] - 6.0).abs() < 1e-10 && h[2].abs() < 1e-10);
        }
    }

    #[test]
    fn sym_gradient_of_linear_map() {
        let g = Grid::unit(3, 6).unwrap();
        let phi = GridField::from_fn(&g, Rank::Vector, |x, o| {
            o[0] = x[1];
            o[1] = 2.0 * x[2];
            o[2] = x[0] + x[2];
        });
        let s = sym_gradient(&phi).unwrap();
        // off (0,1), (0,2), (1,2) then diag
        let expect = [0.5, 0.5, 1.0, 0.0, 0.0, 1.0];
        for idx in 0..g.len() {
            for (a, b) in s.at(idx).iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn second_order_convergence() {
        let err = |m: usize| {
            let g = Grid::unit(1, m).unwrap();
            let f = GridField::from_fn(&g, Rank::Scalar, |x, o| o[0] = (3.0 * x[0]).sin());
            let d = gradient(&f).unwrap();
            (0..g.len())
                .map(|i| (d.values[i] - 3.0 * (3.0 * g.coord(i)[0]).cos()).abs())
                .fold(0.0, f64::max)
        };
        let r = err(33) / err(65);
        assert!((3.6..4.4).contains(&r), "ratio {r}");
    }
}
