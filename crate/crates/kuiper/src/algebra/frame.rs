use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::space::{CaseTag, MatrixSpace};
use super::vector_form::{sym_pairs, vector_form_unchecked};
use crate::error::{Error, Result};

/// Bumped whenever the constructions in [`super::choose_l`] change.
pub const FRAME_CACHE_VERSION: u32 = 2;

const POLISHED: f64 = 1e-30;

/// Unit vectors `xi_1..xi_Xi` whose rank one matrices span the dual of `L`.
#[derive(Clone, Debug)]
pub struct PrimitiveFrame {
    pub n: usize,
    pub tag: CaseTag,
    pub xi: Vec<DVector<f64>>,
    /// Vector forms of `xi_i (x) xi_i`, one per column.
    pub forms: DMatrix<f64>,
    /// Left inverse of `forms`.
    pinv: DMatrix<f64>,
    pub gram_condition: f64,
    /// `max_{i,j} |<eta_j, [xi_i (x) xi_i]>|`.
    pub pairing_residual: f64,
}

impl PrimitiveFrame {
    pub fn from_vectors(space: &MatrixSpace, xi: Vec<DVector<f64>>) -> Result<Self> {
        let n = space.n;
        if xi.iter().any(|v| v.len() != n) {
            return Err(Error::invalid("frame vector has wrong length"));
        }
        let xi: Vec<DVector<f64>> = xi.into_iter().map(|v| v.normalize()).collect();
        let forms = DMatrix::from_columns(&xi.iter().map(|v| rank_one_form(v)).collect::<Vec<_>>());
        let gram = forms.transpose() * &forms;
        let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e)));
        let gram_condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        let pinv = gram
            .try_inverse()
            .map(|g| g * forms.transpose())
            .ok_or(Error::IllConditioned { condition: gram_condition })?;
        let mats = space.orthonormal_doubled()?;
        let pairing_residual = xi
            .iter()
            .flat_map(|v| mats.iter().map(move |c| 0.5 * v.dot(&(c * v))).map(f64::abs))
            .fold(0.0, f64::max);
        Ok(PrimitiveFrame { n, tag: space.tag, xi, forms, pinv, gram_condition, pairing_residual })
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Coefficients `a` with `sum a_i [xi_i (x) xi_i] = v` for `v` in the span.
    pub fn coordinates(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        (&self.pinv * v).iter().copied().collect()
    }

    /// Vector form of `sum a_i xi_i (x) xi_i`.
    pub fn combine(&self, a: &[f64]) -> Vec<f64> {
        (&self.forms * DVector::from_column_slice(a)).iter().copied().collect()
    }

    pub fn write(&self, path: &Path, tolerance: f64) -> Result<()> {
        let mut s = String::new();
        s.push_str("# kuiper primitive frame\n");
        s.push_str(&format!("n {}\n", self.n));
        s.push_str(&format!("xi_n {}\n", self.len()));
        s.push_str(&format!("case_tag {}\n", self.tag));
        s.push_str(&format!("tolerance {tolerance:e}\n"));
        s.push_str(&format!("version {FRAME_CACHE_VERSION}\n"));
        for v in &self.xi {
            let row: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        let mut f = fs::File::create(path)?;
        f.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Reads a cached frame and re-validates it against `space`.
    pub fn read(path: &Path, space: &MatrixSpace) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut header = std::collections::HashMap::new();
        let mut rows = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let first = line.split_whitespace().next().unwrap_or_default();
            if first.parse::<f64>().is_ok() {
                let row: std::result::Result<Vec<f64>, _> =
                    line.split_whitespace().map(str::parse).collect();
                let row = row.map_err(|e| Error::format("frame cache", e.to_string()))?;
                rows.push(DVector::from_vec(row));
            } else {
                let mut it = line.splitn(2, ' ');
                let k = it.next().unwrap_or_default().to_string();
                header.insert(k, it.next().unwrap_or_default().trim().to_string());
            }
        }
        let get = |k: &str| header.get(k).cloned().ok_or_else(|| Error::format("frame cache", format!("missing {k}")));
        let n: usize = get("n")?.parse().map_err(|_| Error::format("frame cache", "bad n"))?;
        let xi_n: usize = get("xi_n")?.parse().map_err(|_| Error::format("frame cache", "bad xi_n"))?;
        let tag = CaseTag::parse(&get("case_tag")?).ok_or_else(|| Error::format("frame cache", "bad case_tag"))?;
        let version: u32 = get("version")?.parse().map_err(|_| Error::format("frame cache", "bad version"))?;
        if n != space.n || tag != space.tag || version != FRAME_CACHE_VERSION || rows.len() != xi_n {
            return Err(Error::format("frame cache", "header does not match the requested space"));
        }
        let frame = PrimitiveFrame::from_vectors(space, rows)?;
        if frame.len() != space.codim() {
            return Err(Error::format("frame cache", "wrong number of directions"));
        }
        if frame.pairing_residual > 1e-9 {
            return Err(Error::format("frame cache", format!("stale frame, residual {:.2e}", frame.pairing_residual)));
        }
        Ok(frame)
    }
}

/// Vector form of `v (x) v`.
pub(crate) fn rank_one_form(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_iterator(sym_pairs(n).len(), sym_pairs(n).into_iter().map(|(i, j)| v[i] * v[j]))
}

#[derive(Clone, Debug)]
pub struct FrameSearch {
    /// Random starting points in addition to the structured ones.
    pub restarts: usize,
    /// Acceptance threshold on `sum_j (1/2 xi^T C_j xi)^2`.
    pub tolerance: f64,
    pub max_condition: f64,
    pub seed: u64,
}

impl Default for FrameSearch {
    fn default() -> Self {
        FrameSearch { restarts: 400, tolerance: 1e-18, max_condition: 1e6, seed: 0xf4a3e }
    }
}

/// Projected Gauss-Newton onto `{|x| = 1, 1/2 x^T C_j x = 0 for all j}`.
fn refine(mats: &[DMatrix<f64>], mut x: DVector<f64>, tol: f64) -> Option<DVector<f64>> {
    let n = x.len();
    let d = mats.len();
    x.normalize_mut();
    for _ in 0..60 {
        let cx: Vec<DVector<f64>> = mats.iter().map(|c| c * &x).collect();
        let r: Vec<f64> = cx.iter().map(|v| 0.5 * v.dot(&x)).collect();
        let res: f64 = r.iter().map(|t| t * t).sum();
        // keep polishing well past the acceptance threshold
        if res <= POLISHED {
            return Some(x);
        }
        // rows: gradients C_j x, plus x itself to stay tangent to the sphere
        let mut a = DMatrix::zeros(d + 1, n);
        let mut b = DVector::zeros(d + 1);
        for j in 0..d {
            a.row_mut(j).copy_from(&cx[j].transpose());
            b[j] = -r[j];
        }
        a.row_mut(d).copy_from(&x.transpose());
        let aat = &a * a.transpose();
        let step = match aat.clone().cholesky() {
            Some(ch) => a.transpose() * ch.solve(&b),
            None => {
                let svd = aat.svd(true, true);
                a.transpose() * svd.solve(&b, 1e-12).ok()?
            }
        };
        x += step;
        x.normalize_mut();
    }
    let res: f64 = mats.iter().map(|c| (0.5 * x.dot(&(c * &x))).powi(2)).sum();
    (res <= tol).then_some(x)
}

fn canonical_sign(mut v: DVector<f64>) -> DVector<f64> {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    v
}

/// Collects null cone points of `space` from structured and random starts.
fn null_cone_pool(space: &MatrixSpace, search: &FrameSearch) -> Result<Vec<DVector<f64>>> {
    let n = space.n;
    let mats = space.orthonormal_doubled()?;
    let mut starts: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        starts.push(DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 }));
    }
    for i in 0..n {
        for j in i + 1..n {
            for s in [1.0, -1.0] {
                starts.push(DVector::from_fn(n, |k, _| {
                    if k == i {
                        1.0
                    } else if k == j {
                        s
                    } else {
                        0.0
                    }
                }));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed ^ (n as u64).wrapping_mul(0x9e37_79b9));
    for _ in 0..search.restarts {
        starts.push(DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)));
    }
    let mut pool: Vec<DVector<f64>> = Vec::new();
    for s in starts {
        if let Some(x) = refine(&mats, s, search.tolerance) {
            let x = canonical_sign(x);
            if pool.iter().all(|p| p.dot(&x).abs() < 1.0 - 1e-10) {
                pool.push(x);
            }
        }
    }
    Ok(pool)
}

/// Greedy pivoted selection of well spread rank one forms; returns the
/// chosen indices, stopping early when the pool's span is exhausted.
fn greedy_select(pool: &[DVector<f64>], want: usize) -> Vec<usize> {
    let mut resid: Vec<DVector<f64>> = pool.iter().map(rank_one_form).collect();
    let mut chosen = Vec::with_capacity(want);
    while chosen.len() < want {
        let best = resid
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, r)| (i, r.norm()))
            .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
                Some((_, bv)) if bv >= v - 1e-12 => acc,
                _ => Some((i, v)),
            });
        let Some((k, norm)) = best else { break };
        if norm < 1e-8 {
            break;
        }
        let q = &resid[k] / norm;
        for r in resid.iter_mut() {
            let p = q.dot(r);
            *r -= &q * p;
        }
        chosen.push(k);
    }
    chosen
}

/// Searches for a primitive frame of the dual of `space`.
///
/// Fails with [`Error::FrameNotFound`] when the rank one matrices on the
/// null cone of `space` span fewer than `codim` dimensions.
pub fn find_primitive_frame(space: &MatrixSpace, search: &FrameSearch) -> Result<PrimitiveFrame> {
    let want = space.codim();
    let pool = null_cone_pool(space, search)?;
    let chosen = greedy_select(&pool, want);
    if chosen.len() < want {
        return Err(Error::FrameNotFound { n: space.n, rank: chosen.len(), needed: want });
    }
    let xi = chosen.into_iter().map(|i| pool[i].clone()).collect();
    let frame = PrimitiveFrame::from_vectors(space, xi)?;
    if frame.gram_condition > search.max_condition {
        return Err(Error::IllConditioned { condition: frame.gram_condition });
    }
    Ok(frame)
}

pub fn cache_path(dir: &Path, space: &MatrixSpace) -> PathBuf {
    dir.join(format!("frame_n{}_{}_v{}.txt", space.n, space.tag, FRAME_CACHE_VERSION))
}

/// Uses a cached frame from `dir` when valid, otherwise searches and
/// writes the result back.
pub fn load_or_find_frame(
    space: &MatrixSpace,
    dir: Option<&Path>,
    search: &FrameSearch,
) -> Result<PrimitiveFrame> {
    if let Some(dir) = dir {
        let path = cache_path(dir, space);
        if path.exists() {
            match PrimitiveFrame::read(&path, space) {
                Ok(f) => return Ok(f),
                Err(e) => log::warn!("ignoring frame cache {}: {e}", path.display()),
            }
        }
        let frame = find_primitive_frame(space, search)?;
        fs::create_dir_all(dir)?;
        frame.write(&path, search.tolerance)?;
        return Ok(frame);
    }
    find_primitive_frame(space, search)
}

#[allow(dead_code)]
pub(crate) fn forms_of(v: &[DVector<f64>]) -> Vec<DVector<f64>> {
    v.iter().map(|x| vector_form_unchecked(&(x * x.transpose()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::choose_l;

    #[test]
    fn planar_frame_is_coordinate_axes() {
        let l = choose_l(2).unwrap();
        let f = find_primitive_frame(&l, &FrameSearch::default()).unwrap();
        assert_eq!(f.len(), 2);
        assert!((f.xi[0][0] - 1.0).abs() < 1e-15 && f.xi[0][1].abs() < 1e-15);
        assert!((f.xi[1][1] - 1.0).abs() < 1e-15 && f.xi[1][0].abs() < 1e-15);
    }

    #[test]
    fn three_dimensional_frame_lies_on_cone() {
        let l = choose_l(3).unwrap();
        let f = find_primitive_frame(&l, &FrameSearch::default()).unwrap();
        assert_eq!(f.len(), 5);
        for v in &f.xi {
            assert!((v[2].abs() - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        }
        assert!(f.pairing_residual < 1e-9);
        assert!(f.gram_condition < 1e6);
    }

    #[test]
    fn rank_one_forms_agree_with_outer_product() {
        let v = DVector::from_vec(vec![0.3, -0.4, 0.5]);
        let a = rank_one_form(&v);
        let b = &forms_of(&[v])[0];
        assert!((a - b).amax() < 1e-16);
    }

    #[test]
    fn cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let l = choose_l(5).unwrap();
        let f1 = load_or_find_frame(&l, Some(dir.path()), &FrameSearch::default()).unwrap();
        assert!(cache_path(dir.path(), &l).exists());
        let f2 = load_or_find_frame(&l, Some(dir.path()), &FrameSearch::default()).unwrap();
        for (a, b) in f1.xi.iter().zip(&f2.xi) {
            assert!((a - b).amax() < 1e-15);
        }
    }
}
