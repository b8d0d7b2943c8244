use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fd::{deriv_axis, second_deriv_axis};
use super::GridField;

/// Cumulative Hoelder-type norms on the grid:
/// `c1 = c0 + sup |grad f|`, `c2 = c1 + sup |grad^2 f|`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Norms {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

/// `C^0`, `C^1` and `C^2` norms from grid maxima of finite differences.
pub fn norms(f: &GridField) -> Norms {
    let g = &f.grid;
    let n = g.dim();
    let w = f.rank.weights(n);
    let comps = f.components();
    let len = g.len();
    let mut d1 = vec![0.0; len];
    let mut d2 = vec![0.0; len];
    for (c, comp) in comps.iter().enumerate() {
        let firsts: Vec<Vec<f64>> = (0..n).map(|a| deriv_axis(g, comp, a)).collect();
        for (a, da) in firsts.iter().enumerate() {
            for i in 0..len {
                d1[i] += w[c] * da[i] * da[i];
            }
            let daa = second_deriv_axis(g, comp, a);
            for i in 0..len {
                d2[i] += w[c] * daa[i] * daa[i];
            }
            for b in a + 1..n {
                let dab = deriv_axis(g, da, b);
                for i in 0..len {
                    d2[i] += 2.0 * w[c] * dab[i] * dab[i];
                }
            }
        }
    }
    let c0 = f.sup_norm();
    let s1 = d1.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt();
    let s2 = d2.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt();
    Norms { c0, c1: c0 + s1, c2: c0 + s1 + s2 }
}

#[derive(Clone, Debug)]
pub struct HolderOptions {
    /// Random pairs added to the structured dyadic offsets.
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for HolderOptions {
    fn default() -> Self {
        HolderOptions { random_pairs: 20_000, seed: 0x401de }
    }
}

/// `[f]_alpha = sup |f(x) - f(y)| / |x - y|^alpha`, estimated over all
/// node pairs separated by dyadic offsets along the axes and diagonals,
/// plus random pairs.
pub fn holder_seminorm(f: &GridField, alpha: f64, opts: &HolderOptions) -> f64 {
    let g = &f.grid;
    let n = g.dim();
    let h = g.h();
    let w = f.rank.weights(n);
    let k = f.ncomp();
    let diff = |i: usize, j: usize| -> f64 {
        let (a, b) = (&f.values[i * k..(i + 1) * k], &f.values[j * k..(j + 1) * k]);
        a.iter().zip(b).zip(&w).map(|((x, y), w)| w * (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    // direction patterns with entries in {-1, 0, 1}, first nonzero positive
    let mut dirs: Vec<[i64; 3]> = Vec::new();
    for code in 1..3usize.pow(n as u32) {
        let mut d = [0i64; 3];
        let mut c = code;
        for slot in d.iter_mut().take(n) {
            *slot = (c % 3) as i64 - 1;
            c /= 3;
        }
        if d.iter().find(|v| **v != 0).copied() == Some(1) {
            dirs.push(d);
        }
    }
    let max_side = *g.shape().iter().max().unwrap();
    let mut steps: Vec<usize> = std::iter::successors(Some(1usize), |s| Some(s * 2))
        .take_while(|s| *s < max_side)
        .collect();
    steps.push(max_side - 1);
    steps.dedup();
    let shape = g.shape();
    let mut best = 0.0f64;
    for d in &dirs {
        let len_unit = (d.iter().map(|v| v * v).sum::<i64>() as f64).sqrt();
        for &s in &steps {
            let dist = (s as f64 * h * len_unit).powf(alpha);
            for idx in 0..g.len() {
                let m = g.multi_index(idx);
                let mut other = [0usize; 3];
                let mut ok = true;
                for a in 0..n {
                    let t = m[a] as i64 + d[a] * s as i64;
                    if t < 0 || t >= shape[a] as i64 {
                        ok = false;
                        break;
                    }
                    other[a] = t as usize;
                }
                if ok {
                    best = best.max(diff(idx, g.index(&other[..n])) / dist);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_pairs {
        let i = rng.random_range(0..g.len());
        let j = rng.random_range(0..g.len());
        if i == j {
            continue;
        }
        let (xi, xj) = (g.coord(i), g.coord(j));
        let dist = (0..n).map(|a| (xi[a] - xj[a]).powi(2)).sum::<f64>().sqrt();
        best = best.max(diff(i, j) / dist.powf(alpha));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Rank};

    #[test]
    fn linear_function_norms() {
        let g = Grid::unit(2, 33).unwrap();
        let f = GridField::from_fn(&g, Rank::Scalar, |x, o| o[0] = x[0]);
        let nm = norms(&f);
        assert!((nm.c0 - 1.0).abs() < 1e-14);
        assert!((nm.c1 - 2.0).abs() < 1e-12);
        assert!((nm.c2 - 2.0).abs() < 1e-9);
        let s = holder_seminorm(&f, 0.5, &HolderOptions::default());
        assert!((s - 1.0).abs() < 1e-12, "seminorm {s}");
    }
}
