use rayon::prelude::*;

use super::{Grid, GridField};
use crate::error::{Error, Result};

/// Even reflection of an index about the end nodes `0` and `m - 1`.
#[inline]
fn reflect(i: isize, m: usize) -> usize {
    let period = 2 * (m as isize - 1);
    let mut r = i.rem_euclid(period);
    if r > m as isize - 1 {
        r = period - r;
    }
    r as usize
}

/// Offsets and normalised weights of the discrete kernel `(1 - (r/l)^2)^4`.
fn kernel(grid: &Grid, l: f64) -> Vec<([isize; 3], f64)> {
    let dim = grid.dim();
    let h = grid.h();
    let rad = (l / h).floor() as isize;
    let mut taps = Vec::new();
    let range = |a: usize| if a < dim { -rad..=rad } else { 0..=0 };
    for i in range(0) {
        for j in range(1) {
            for k in range(2) {
                let r2 = ((i * i + j * j + k * k) as f64) * h * h / (l * l);
                if r2 < 1.0 {
                    taps.push(([i, j, k], (1.0 - r2).powi(4)));
                }
            }
        }
    }
    let total: f64 = taps.iter().map(|t| t.1).sum();
    taps.iter_mut().for_each(|t| t.1 /= total);
    taps
}

/// Convolution with the compactly supported polynomial bump of radius `l`,
/// extending the field by even reflection across each face.
///
/// Kernel weights are normalised on the grid, so constants are preserved
/// exactly. Radii below `2h` only produce a warning because the kernel then
/// resolves to a handful of taps.
pub fn mollify(f: &GridField, l: f64) -> Result<GridField> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid("mollify: radius must be positive"));
    }
    let grid = &f.grid;
    if l < 2.0 * grid.h() {
        log::warn!("mollify: radius {l:.3e} is below two grid spacings ({:.3e})", grid.h());
    }
    let taps = kernel(grid, l);
    let dim = grid.dim();
    let k = f.ncomp();
    let shape = grid.shape().to_vec();
    let strides = grid.strides().to_vec();
    let mut out = GridField::zeros(grid, f.rank);
    out.values.par_chunks_mut(k).enumerate().for_each(|(idx, o)| {
        let m = grid.multi_index(idx);
        for (off, w) in &taps {
            let mut j = 0;
            for a in 0..dim {
                j += reflect(m[a] as isize + off[a], shape[a]) * strides[a];
            }
            let src = &f.values[j * k..(j + 1) * k];
            for c in 0..k {
                o[c] += w * src[c];
            }
        }
    });
    Ok(out)
}
