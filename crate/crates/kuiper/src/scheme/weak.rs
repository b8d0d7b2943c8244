use crate::error::{Error, Result};
use crate::grid::{outer_gradient, sym_gradient, GridField, Rank};

/// Pairings of the residual `1/2 grad v (x) grad v + Sym grad w - A` with
/// `cof grad^2 phi` over a battery of bump test functions `phi`.
#[derive(Clone, Debug)]
pub struct WeakResidual {
    /// `|<E, cof grad^2 phi_k>|` per test function.
    pub pairings: Vec<f64>,
    /// `|cof grad^2 phi_k|_{L^1}` per test function.
    pub test_norms: Vec<f64>,
}

impl WeakResidual {
    pub fn max_pairing(&self) -> f64 {
        self.pairings.iter().copied().fold(0.0, f64::max)
    }

    /// Largest pairing divided by the `L^1` norm of its test tensor.
    pub fn max_normalized(&self) -> f64 {
        self.pairings.iter().zip(&self.test_norms).map(|(p, t)| p / t).fold(0.0, f64::max)
    }
}

/// `(1 - s^2)^4` on `|s| < 1` and its first two derivatives.
fn bump(s: f64) -> [f64; 3] {
    if s.abs() >= 1.0 {
        return [0.0; 3];
    }
    let u = 1.0 - s * s;
    [u.powi(4), -8.0 * s * u.powi(3), -8.0 * u.powi(3) + 48.0 * s * s * u * u]
}

const CENTERS: [f64; 3] = [0.3, 0.5, 0.7];
const RADIUS: f64 = 0.25;

/// Very weak form of the two-dimensional equation: for divergence free
/// test tensors `cof grad^2 phi` the `Sym grad w` part integrates to zero,
/// leaving `<1/2 grad v (x) grad v - A, cof grad^2 phi>`.
///
/// Tests are `phi(x, y) = b((x - x0) / r) b((y - y0) / r)` on a 3 x 3 lattice of
/// centres; integrals use the trapezoid rule.
pub fn very_weak_residual(v: &GridField, w: &GridField, a: &GridField) -> Result<WeakResidual> {
    let grid = &v.grid;
    if grid.dim() != 2 {
        return Err(Error::invalid("the very weak residual is defined for n = 2 only"));
    }
    if a.rank != Rank::Sym || v.rank != Rank::Scalar || w.rank != Rank::Vector || &a.grid != grid || &w.grid != grid {
        return Err(Error::invalid("very weak residual needs scalar v, vector w and symmetric A on one grid"));
    }
    let mut e = outer_gradient(v)?;
    e.axpy(1.0, &sym_gradient(w)?)?;
    e.axpy(-1.0, a)?;
    let h = grid.h();
    let shape = grid.shape().to_vec();
    let weight = |idx: usize| {
        let m = grid.multi_index(idx);
        (0..2).map(|k| if m[k] == 0 || m[k] == shape[k] - 1 { 0.5 } else { 1.0 }).product::<f64>() * h * h
    };
    let mut out = WeakResidual { pairings: Vec::new(), test_norms: Vec::new() };
    for &x0 in &CENTERS {
        for &y0 in &CENTERS {
            let (mut pair, mut norm) = (0.0, 0.0);
            for idx in 0..grid.len() {
                let x = grid.coord(idx);
                let bx = bump((x[0] - x0) / RADIUS);
                let by = bump((x[1] - y0) / RADIUS);
                if bx[0] == 0.0 || by[0] == 0.0 {
                    continue;
                }
                let r2 = RADIUS * RADIUS;
                let pxx = bx[2] * by[0] / r2;
                let pyy = bx[0] * by[2] / r2;
                let pxy = bx[1] * by[1] / r2;
                // cof grad^2 phi = [[p_yy, -p_xy], [-p_xy, p_xx]]; vector form [e12, e11, e22]
                let ev = e.at(idx);
                let wt = weight(idx);
                pair += wt * (ev[1] * pyy + ev[2] * pxx - 2.0 * ev[0] * pxy);
                norm += wt * (pyy * pyy + pxx * pxx + 2.0 * pxy * pxy).sqrt();
            }
            out.pairings.push(pair.abs());
            out.test_norms.push(norm);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn rejects_three_dimensions() {
        let g = Grid::unit(3, 9).unwrap();
        let r = very_weak_residual(&GridField::zeros(&g, Rank::Scalar), &GridField::zeros(&g, Rank::Vector), &GridField::zeros(&g, Rank::Sym));
        assert!(r.is_err());
    }

    #[test]
    fn symmetric_gradients_are_invisible() {
        let g = Grid::unit(2, 129).unwrap();
        let v = GridField::zeros(&g, Rank::Scalar);
        let w = GridField::from_fn(&g, Rank::Vector, |x, o| {
            o[0] = (2.0 * x[1]).sin() + x[0] * x[0];
            o[1] = (x[0] * x[1]).cos();
        });
        let a = sym_gradient(&w).unwrap();
        assert!(very_weak_residual(&v, &w, &a).unwrap().max_pairing() < 1e-14);
        let zero_a = GridField::zeros(&g, Rank::Sym);
        // Sym grad w alone pairs to zero up to the quadrature error
        let r = very_weak_residual(&v, &w, &zero_a).unwrap();
        assert!(r.max_normalized() < 1e-3, "{:?}", r.pairings);
    }

    #[test]
    fn linear_in_injected_deficit() {
        let g = Grid::unit(2, 65).unwrap();
        let v = GridField::zeros(&g, Rank::Scalar);
        let w = GridField::zeros(&g, Rank::Vector);
        let bumpy = |eps: f64| {
            GridField::from_fn(&g, Rank::Sym, move |x, o| {
                let s = eps * (3.0 * x[0] + x[1]).sin();
                o[0] = 0.0;
                o[1] = s;
                o[2] = s;
            })
        };
        let r1 = very_weak_residual(&v, &w, &bumpy(1e-3)).unwrap();
        let r2 = very_weak_residual(&v, &w, &bumpy(2e-3)).unwrap();
        assert!(r1.max_pairing() > 0.0);
        for (p1, p2) in r1.pairings.iter().zip(&r2.pairings) {
            assert!((p2 - 2.0 * p1).abs() <= 1e-12 * p2.max(1e-300));
        }
    }
}
