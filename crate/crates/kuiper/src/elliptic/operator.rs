use rayon::prelude::*;

use crate::algebra::sym_index;
use crate::grid::Grid;
use crate::sparse::Csr;

/// First derivative stencil at one node along one axis.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub nodes: [usize; 3],
    pub coef: [f64; 3],
}

impl Stencil {
    pub fn at(grid: &Grid, idx: usize, axis: usize) -> Stencil {
        let i = grid.axis_index(idx, axis);
        let class = if i == 0 {
            LOW
        } else if i + 1 == grid.shape()[axis] {
            HIGH
        } else {
            INNER
        };
        Stencil::of_class(class, idx, grid.strides()[axis], 1.0 / (2.0 * grid.h()))
    }

    #[inline]
    fn of_class(class: u8, idx: usize, s: usize, inv: f64) -> Stencil {
        if class == LOW {
            Stencil { nodes: [idx, idx + s, idx + 2 * s], coef: [-3.0 * inv, 4.0 * inv, -inv] }
        } else if class == HIGH {
            Stencil { nodes: [idx, idx - s, idx - 2 * s], coef: [3.0 * inv, -4.0 * inv, inv] }
        } else {
            Stencil { nodes: [idx - s, idx + s, idx], coef: [-inv, inv, 0.0] }
        }
    }
}

const LOW: u8 = 0;
const INNER: u8 = 1;
const HIGH: u8 = 2;

/// Finite difference `B: Phi -> [grad Phi + grad Phi^T]` on a grid.
///
/// Vector fields are stored node-major with `n` components, symmetric
/// fields node-major in vector form.
#[derive(Clone, Debug)]
pub struct BOperator {
    pub grid: Grid,
    weights: Vec<f64>,
    /// Per node and axis: low face, interior or high face.
    class: Vec<[u8; 3]>,
    inv2h: f64,
}

impl BOperator {
    pub fn new(grid: &Grid) -> Self {
        let weights = (0..grid.len())
            .map(|idx| {
                (0..grid.dim())
                    .map(|a| {
                        let i = grid.axis_index(idx, a);
                        if i == 0 || i + 1 == grid.shape()[a] {
                            0.5
                        } else {
                            1.0
                        }
                    })
                    .product()
            })
            .collect();
        let class = (0..grid.len())
            .map(|idx| {
                let mut c = [INNER; 3];
                for (a, ca) in c.iter_mut().enumerate().take(grid.dim()) {
                    let i = grid.axis_index(idx, a);
                    if i == 0 {
                        *ca = LOW;
                    } else if i + 1 == grid.shape()[a] {
                        *ca = HIGH;
                    }
                }
                c
            })
            .collect();
        BOperator { grid: grid.clone(), weights, class, inv2h: 1.0 / (2.0 * grid.h()) }
    }

    /// Face class of `idx` along `axis`: 0 low face, 1 interior, 2 high face.
    #[inline]
    pub(crate) fn class(&self, idx: usize, axis: usize) -> u8 {
        self.class[idx][axis]
    }

    pub(crate) fn inv2h(&self) -> f64 {
        self.inv2h
    }

    #[inline]
    fn stencil(&self, idx: usize, axis: usize) -> Stencil {
        Stencil::of_class(self.class[idx][axis], idx, self.grid.strides()[axis], self.inv2h)
    }

    pub fn n(&self) -> usize {
        self.grid.dim()
    }

    /// Trapezoidal node weights, without the `h^n` factor.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let n = self.n();
        let nsym = n * (n + 1) / 2;
        assert_eq!(phi.len(), self.grid.len() * n);
        let mut out = vec![0.0; self.grid.len() * nsym];
        out.par_chunks_mut(nsym).enumerate().for_each(|(idx, o)| {
            // jac[i][a] = d_a Phi_i
            let mut jac = [[0.0; 3]; 3];
            for a in 0..n {
                let st = self.stencil(idx, a);
                for i in 0..n {
                    jac[i][a] = (0..3).map(|t| st.coef[t] * phi[st.nodes[t] * n + i]).sum();
                }
            }
            for i in 0..n {
                for j in i..n {
                    o[sym_index(n, i, j)] = jac[i][j] + jac[j][i];
                }
            }
        });
        out
    }

    /// Plain transpose `B^T g`.
    pub fn apply_transpose(&self, g: &[f64]) -> Vec<f64> {
        let n = self.n();
        let nsym = n * (n + 1) / 2;
        assert_eq!(g.len(), self.grid.len() * nsym);
        let mut out = vec![0.0; self.grid.len() * n];
        for idx in 0..self.grid.len() {
            let gr = &g[idx * nsym..(idx + 1) * nsym];
            if gr.iter().all(|v| *v == 0.0) {
                continue;
            }
            for a in 0..n {
                let st = self.stencil(idx, a);
                // row (i, a) feeds d_a into Phi_i; the diagonal row counts twice
                for i in 0..n {
                    let gv = gr[sym_index(n, i, a)];
                    let w = if i == a { 2.0 * gv } else { gv };
                    if w != 0.0 {
                        for t in 0..3 {
                            out[st.nodes[t] * n + i] += st.coef[t] * w;
                        }
                    }
                }
            }
        }
        out
    }

    /// Adjoint in the trapezoidal inner product: `H^-1 B^T H g`.
    pub fn apply_adjoint(&self, g: &[f64]) -> Vec<f64> {
        let n = self.n();
        let nsym = n * (n + 1) / 2;
        let hg: Vec<f64> = g.iter().enumerate().map(|(k, v)| v * self.weights[k / nsym]).collect();
        let mut out = self.apply_transpose(&hg);
        out.iter_mut().enumerate().for_each(|(k, v)| *v /= self.weights[k / n]);
        out
    }

    /// Entries of the row of `B` for node `idx` and vector form slot `k`.
    pub fn row_entries(&self, idx: usize, i: usize, j: usize) -> Vec<(usize, f64)> {
        let n = self.n();
        let mut out = Vec::with_capacity(6);
        if i == j {
            let st = self.stencil(idx, i);
            for t in 0..3 {
                out.push((st.nodes[t] * n + i, 2.0 * st.coef[t]));
            }
        } else {
            let sj = self.stencil(idx, j);
            let si = self.stencil(idx, i);
            for t in 0..3 {
                out.push((sj.nodes[t] * n + i, sj.coef[t]));
                out.push((si.nodes[t] * n + j, si.coef[t]));
            }
        }
        out.retain(|e| e.1 != 0.0);
        out
    }

    pub fn assemble(&self) -> Csr {
        let n = self.n();
        let nsym = n * (n + 1) / 2;
        let mut trip = Vec::new();
        for idx in 0..self.grid.len() {
            for i in 0..n {
                for j in i..n {
                    let r = idx * nsym + sym_index(n, i, j);
                    trip.extend(self.row_entries(idx, i, j).into_iter().map(|(c, v)| (r, c, v)));
                }
            }
        }
        Csr::from_triplets(self.grid.len() * nsym, self.grid.len() * n, &trip)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sym_gradient, GridField, Rank};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_twice_sym_gradient() {
        let g = Grid::unit(2, 9).unwrap();
        let phi = GridField::from_fn(&g, Rank::Vector, |x, o| {
            o[0] = (x[0] * 3.0).sin() * x[1];
            o[1] = x[0] * x[0] - (2.0 * x[1]).cos();
        });
        let b = BOperator::new(&g);
        let got = b.apply(&phi.values);
        let expect = sym_gradient(&phi).unwrap();
        for (a, e) in got.iter().zip(&expect.values) {
            assert!((a - 2.0 * e).abs() < 1e-12);
        }
        let dense = b.assemble().matvec(&phi.values);
        for (a, e) in got.iter().zip(&dense) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_and_adjoint_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 3] {
            let g = Grid::unit(dim, 6).unwrap();
            let b = BOperator::new(&g);
            let nsym = dim * (dim + 1) / 2;
            let phi: Vec<f64> = (0..g.len() * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s: Vec<f64> = (0..g.len() * nsym).map(|_| rng.random_range(-1.0..1.0)).collect();
            let bphi = b.apply(&phi);
            let bts = b.apply_transpose(&s);
            let lhs: f64 = bphi.iter().zip(&s).map(|(a, c)| a * c).sum();
            let rhs: f64 = phi.iter().zip(&bts).map(|(a, c)| a * c).sum();
            assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));

            let w = b.weights();
            let bstar = b.apply_adjoint(&s);
            let lhs: f64 = bphi.iter().enumerate().map(|(k, v)| v * s[k] * w[k / nsym]).sum();
            let rhs: f64 = phi.iter().enumerate().map(|(k, v)| v * bstar[k] * w[k / dim]).sum();
            assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
        }
    }
}
