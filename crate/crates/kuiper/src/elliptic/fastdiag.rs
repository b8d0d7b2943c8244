//! Exact inverse of `K` when `L` is spanned by one diagonal matrix.
//!
//! Then `K` only couples nodes two steps apart along each axis, so it splits
//! over the `2^n` parity classes of the node indices. On each class it is a
//! Kronecker sum of tridiagonal chains (diagonal 2, or 3 next to a face,
//! off-diagonals -1), which are diagonalised once with dense eigensolvers.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::grid::Grid;

struct Chain {
    /// Interior node positions (along the axis) of this parity class.
    positions: Vec<usize>,
    q: DMatrix<f64>,
    lambda: Vec<f64>,
}

fn chain(m: usize, parity: usize) -> Chain {
    let positions: Vec<usize> = (1..m - 1).filter(|i| i % 2 == parity).collect();
    let k = positions.len();
    let mut t = DMatrix::zeros(k, k);
    for (r, &i) in positions.iter().enumerate() {
        let lo = if i == 1 { 2.0 } else { 1.0 };
        let hi = if i + 2 == m { 2.0 } else { 1.0 };
        t[(r, r)] = lo + hi;
        if r + 1 < k {
            t[(r, r + 1)] = -1.0;
            t[(r + 1, r)] = -1.0;
        }
    }
    let eig = SymmetricEigen::new(t);
    Chain { positions, q: eig.eigenvectors, lambda: eig.eigenvalues.iter().copied().collect() }
}

pub(crate) struct FastDiagonal {
    dim: usize,
    /// `chains[axis][parity]`
    chains: Vec<[Chain; 2]>,
    /// Scale `c_a^2 / (2h)^2` of the axis `a` chain.
    scale: Vec<f64>,
    /// Unknown number of every grid node (`usize::MAX` on the boundary).
    unknown: Vec<usize>,
    grid: Grid,
}

impl FastDiagonal {
    /// `c[a]` is the diagonal of the single doubled generator.
    pub(crate) fn new(grid: &Grid, c: &[f64], interior: &[usize]) -> Self {
        let dim = grid.dim();
        let inv = 1.0 / (2.0 * grid.h());
        let chains = (0..dim).map(|a| [chain(grid.shape()[a], 0), chain(grid.shape()[a], 1)]).collect();
        let scale = c.iter().map(|v| v * v * inv * inv).collect();
        let mut unknown = vec![usize::MAX; grid.len()];
        for (k, &node) in interior.iter().enumerate() {
            unknown[node] = k;
        }
        FastDiagonal { dim, chains, scale, unknown, grid: grid.clone() }
    }

    pub(crate) fn solve(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for class in 0..(1usize << self.dim) {
            let parity: Vec<usize> = (0..self.dim).map(|a| (class >> a) & 1).collect();
            let ch: Vec<&Chain> = (0..self.dim).map(|a| &self.chains[a][parity[a]]).collect();
            let shape: Vec<usize> = ch.iter().map(|c| c.positions.len()).collect();
            if shape.iter().any(|&s| s == 0) {
                continue;
            }
            let total: usize = shape.iter().product();
            let nodes: Vec<usize> = (0..total)
                .map(|lin| {
                    let mut rem = lin;
                    let mut m = [0usize; 3];
                    for a in (0..self.dim).rev() {
                        m[a] = ch[a].positions[rem % shape[a]];
                        rem /= shape[a];
                    }
                    self.unknown[self.grid.index(&m[..self.dim])]
                })
                .collect();
            let mut block: Vec<f64> = nodes.iter().map(|&u| f[u]).collect();
            for a in 0..self.dim {
                transform(&mut block, &shape, a, &ch[a].q, true);
            }
            for (lin, v) in block.iter_mut().enumerate() {
                let mut rem = lin;
                let mut denom = 0.0;
                for a in (0..self.dim).rev() {
                    denom += self.scale[a] * ch[a].lambda[rem % shape[a]];
                    rem /= shape[a];
                }
                *v /= denom;
            }
            for a in 0..self.dim {
                transform(&mut block, &shape, a, &ch[a].q, false);
            }
            for (&u, v) in nodes.iter().zip(&block) {
                out[u] = *v;
            }
        }
        out
    }
}

/// Multiplies every line of `block` along `axis` by `q^T` (or `q`).
fn transform(block: &mut [f64], shape: &[usize], axis: usize, q: &DMatrix<f64>, transpose: bool) {
    let k = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut line = vec![0.0; k];
    let mut res = vec![0.0; k];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * k * inner + i;
            for t in 0..k {
                line[t] = block[base + t * inner];
            }
            for (r, rv) in res.iter_mut().enumerate() {
                *rv = if transpose {
                    (0..k).map(|t| q[(t, r)] * line[t]).sum()
                } else {
                    (0..k).map(|t| q[(r, t)] * line[t]).sum()
                };
            }
            for t in 0..k {
                block[base + t * inner] = res[t];
            }
        }
    }
}
