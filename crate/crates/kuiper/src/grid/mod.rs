//! Uniform Cartesian grids and fields sampled on them.

mod fd;
mod io;
mod mollify;
mod norms;

pub use fd::{deriv_axis, gradient, hessian, outer_gradient, second_deriv_axis, sym_gradient};
pub use io::{read_field, write_csv_2d, write_field};
pub use mollify::mollify;

pub use norms::{holder_seminorm, norms, HolderOptions, Norms};

use crate::algebra::sym_dim;
use crate::error::{Error, Result};

/// A uniform grid with spacing `h` in every direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    shape: Vec<usize>,
    origin: Vec<f64>,
    h: f64,
    strides: Vec<usize>,
}

impl Grid {
    /// `points` nodes per axis on the closed unit cube `[0,1]^dim`.
    pub fn unit(dim: usize, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid("grid needs at least two points per axis"));
        }
        Grid::new(vec![0.0; dim], 1.0 / (points - 1) as f64, vec![points; dim])
    }

    pub fn new(origin: Vec<f64>, h: f64, shape: Vec<usize>) -> Result<Self> {
        let dim = shape.len();
        if !(1..=3).contains(&dim) || origin.len() != dim {
            return Err(Error::invalid(format!("grid dimension must be 1..=3, got {dim}")));
        }
        if shape.iter().any(|&s| s < 5) {
            return Err(Error::invalid(format!("grid needs at least 5 points per axis, got {shape:?}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        let mut strides = vec![1; dim];
        for a in (0..dim - 1).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        Ok(Grid { shape, origin, h, strides })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of node `idx` along `axis`.
    #[inline]
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        (idx / self.strides[axis]) % self.shape[axis]
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let mut m = [0; 3];
        for a in 0..self.dim() {
            m[a] = self.axis_index(idx, a);
        }
        m
    }

    pub fn index(&self, m: &[usize]) -> usize {
        m.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coord(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = self.origin[a] + self.axis_index(idx, a) as f64 * self.h;
        }
        x
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        (0..self.dim()).any(|a| {
            let i = self.axis_index(idx, a);
            i == 0 || i + 1 == self.shape[a]
        })
    }

    /// The same grid extended by `p` nodes on every side.
    pub fn padded(&self, p: usize) -> Grid {
        let origin = self.origin.iter().map(|o| o - p as f64 * self.h).collect();
        let shape = self.shape.iter().map(|s| s + 2 * p).collect();
        Grid::new(origin, self.h, shape).expect("padding a valid grid")
    }

    /// Index in `self.padded(p)` of node `idx` of `self`.
    pub fn to_padded(&self, idx: usize, p: usize) -> usize {
        let m = self.multi_index(idx);
        let mut out = 0;
        let mut stride = 1;
        for a in (0..self.dim()).rev() {
            out += (m[a] + p) * stride;
            stride *= self.shape[a] + 2 * p;
        }
        out
    }

    /// Largest side length of the grid box.
    pub fn extent(&self) -> f64 {
        self.shape.iter().map(|&s| (s - 1) as f64 * self.h).fold(0.0, f64::max)
    }
}

/// What a field stores at each node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    /// `dim` components.
    Vector,
    /// Symmetric `dim x dim` matrix in vector form.
    Sym,
    /// `k` unrelated components, measured with the Euclidean norm.
    Tuple(usize),
}

impl Rank {
    pub fn ncomp(self, dim: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => dim,
            Rank::Sym => sym_dim(dim),
            Rank::Tuple(k) => k,
        }
    }

    /// Weights turning the sum of weighted squares of the components into
    /// the squared natural norm (Frobenius for symmetric matrices).
    pub fn weights(self, dim: usize) -> Vec<f64> {
        match self {
            Rank::Sym => {
                let off = dim * (dim - 1) / 2;
                (0..sym_dim(dim)).map(|k| if k < off { 2.0 } else { 1.0 }).collect()
            }
            r => vec![1.0; r.ncomp(dim)],
        }
    }
}

/// Node values of a field; components are innermost.
#[derive(Clone, Debug)]
pub struct GridField {
    pub grid: Grid,
    pub rank: Rank,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: &Grid, rank: Rank) -> Self {
        let len = grid.len() * rank.ncomp(grid.dim());
        GridField { grid: grid.clone(), rank, values: vec![0.0; len] }
    }

    pub fn from_values(grid: &Grid, rank: Rank, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * rank.ncomp(grid.dim()) {
            return Err(Error::invalid(format!(
                "field has {} values, grid and rank need {}",
                values.len(),
                grid.len() * rank.ncomp(grid.dim())
            )));
        }
        Ok(GridField { grid: grid.clone(), rank, values })
    }

    /// Samples `f(x, out)` at every node.
    pub fn from_fn(grid: &Grid, rank: Rank, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut out = GridField::zeros(grid, rank);
        let k = out.ncomp();
        let dim = grid.dim();
        for (idx, chunk) in out.values.chunks_mut(k).enumerate() {
            let x = grid.coord(idx);
            f(&x[..dim], chunk);
        }
        out
    }

    /// Builds a field from one scalar array per component.
    pub fn from_components(grid: &Grid, rank: Rank, comps: &[Vec<f64>]) -> Result<Self> {
        let k = rank.ncomp(grid.dim());
        if comps.len() != k || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::invalid("component arrays do not match grid and rank"));
        }
        let mut values = vec![0.0; grid.len() * k];
        for (c, comp) in comps.iter().enumerate() {
            for (i, v) in comp.iter().enumerate() {
                values[i * k + c] = *v;
            }
        }
        Ok(GridField { grid: grid.clone(), rank, values })
    }

    pub fn ncomp(&self) -> usize {
        self.rank.ncomp(self.grid.dim())
    }

    pub fn at(&self, idx: usize) -> &[f64] {
        let k = self.ncomp();
        &self.values[idx * k..(idx + 1) * k]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        let k = self.ncomp();
        self.values.iter().skip(c).step_by(k).copied().collect()
    }

    pub fn components(&self) -> Vec<Vec<f64>> {
        (0..self.ncomp()).map(|c| self.component(c)).collect()
    }

    fn check_same(&self, other: &GridField) -> Result<()> {
        if self.grid != other.grid || self.rank != other.rank {
            return Err(Error::invalid("fields live on different grids or ranks"));
        }
        Ok(())
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &GridField) -> Result<()> {
        self.check_same(other)?;
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> GridField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Natural norm of the value at one node.
    pub fn node_norm(&self, idx: usize) -> f64 {
        let w = self.rank.weights(self.grid.dim());
        self.at(idx).iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
    }

    /// `sup_x |f(x)|` in the natural pointwise norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len()).map(|i| self.node_norm(i)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Stacks the components of several fields on the same grid into a tuple field.
    pub fn stack(fields: &[&GridField]) -> Result<GridField> {
        let grid = &fields.first().ok_or_else(|| Error::invalid("stack of no fields"))?.grid;
        let mut comps = Vec::new();
        for f in fields {
            if &f.grid != grid {
                return Err(Error::invalid("stacked fields live on different grids"));
            }
            comps.extend(f.components());
        }
        GridField::from_components(grid, Rank::Tuple(comps.len()), &comps)
    }

    /// Restriction of a field on `self.grid.padded(p)` to the unpadded `grid`.
    pub fn restrict(&self, grid: &Grid, p: usize) -> GridField {
        let k = self.ncomp();
        let mut out = GridField::zeros(grid, self.rank);
        for idx in 0..grid.len() {
            let j = grid.to_padded(idx, p);
            out.values[idx * k..(idx + 1) * k].copy_from_slice(&self.values[j * k..(j + 1) * k]);
        }
        out
    }
}

/// Smooth pseudo-random field: every component is a sum of `modes` terms
/// `c cos(k . x + phase)` with `|c| <= 1/modes`, `k` uniform in `[-pi, pi]^dim`.
pub fn smooth_random_field(grid: &Grid, rank: Rank, modes: usize, seed: u64) -> GridField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let k = rank.ncomp(dim);
    let terms: Vec<Vec<(f64, [f64; 3], f64)>> = (0..k)
        .map(|_| {
            (0..modes)
                .map(|_| {
                    let c = rng.random_range(-1.0..1.0) / modes as f64;
                    let mut w = [0.0; 3];
                    for wa in w.iter_mut().take(dim) {
                        *wa = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                    }
                    (c, w, rng.random_range(0.0..std::f64::consts::TAU))
                })
                .collect()
        })
        .collect();
    GridField::from_fn(grid, rank, |x, o| {
        for (c, comp) in terms.iter().enumerate() {
            o[c] = comp
                .iter()
                .map(|(a, w, ph)| a * ((0..dim).map(|i| w[i] * x[i]).sum::<f64>() + ph).cos())
                .sum();
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_roundtrip() {
        let g = Grid::unit(3, 6).unwrap();
        for idx in [0, 7, 100, g.len() - 1] {
            let m = g.multi_index(idx);
            assert_eq!(g.index(&m[..3]), idx);
        }
        assert_eq!(g.coord(g.len() - 1), [1.0, 1.0, 1.0]);
        assert!(g.is_boundary(0));
        assert!(!g.is_boundary(g.index(&[2, 3, 1])));
    }

    #[test]
    fn padding_maps_nodes_to_same_coordinates() {
        let g = Grid::unit(2, 9).unwrap();
        let p = g.padded(2);
        for idx in [0, 13, 80] {
            let a = g.coord(idx);
            let b = p.coord(g.to_padded(idx, 2));
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn too_small_grid_rejected() {
        assert!(Grid::unit(2, 4).is_err());
    }

    #[test]
    fn sym_norm_is_frobenius() {
        let g = Grid::unit(2, 5).unwrap();
        let f = GridField::from_fn(&g, Rank::Sym, |_, o| o.copy_from_slice(&[1.0, 2.0, 3.0]));
        assert!((f.sup_norm() - (2.0f64 + 4.0 + 9.0).sqrt()).abs() < 1e-14);
    }
}
