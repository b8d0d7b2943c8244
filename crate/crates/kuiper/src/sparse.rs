//! Minimal compressed sparse row matrices.

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, f64)]) -> Csr {
        let mut count = vec![0usize; nrows + 1];
        for &(r, c, _) in trip {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            count[r + 1] += 1;
        }
        for i in 0..nrows {
            count[i + 1] += count[i];
        }
        let mut next = count.clone();
        let mut cols = vec![0usize; trip.len()];
        let mut vals = vec![0.0; trip.len()];
        for &(r, c, v) in trip {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values = Vec::with_capacity(trip.len());
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((count[r]..count[r + 1]).map(|k| (cols[k], vals[k])));
            row.sort_unstable_by_key(|e| e.0);
            for (c, v) in row.iter().copied() {
                if indices.len() > indptr[r] && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Csr { nrows, ncols, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn transpose(&self) -> Csr {
        let mut trip = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            trip.extend(self.row(r).map(|(c, v)| (c, r, v)));
        }
        Csr::from_triplets(self.ncols, self.nrows, &trip)
    }

    /// `A diag(w) A^T`.
    pub fn weighted_gram(&self, w: &[f64]) -> Csr {
        assert_eq!(w.len(), self.ncols);
        let at = self.transpose();
        let mut acc = vec![0.0; self.nrows];
        let mut seen = vec![usize::MAX; self.nrows];
        let mut touched = Vec::new();
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            touched.clear();
            for (c, v) in self.row(r) {
                let vw = v * w[c];
                for (s, v2) in at.row(c) {
                    if seen[s] != r {
                        seen[s] = r;
                        acc[s] = 0.0;
                        touched.push(s);
                    }
                    acc[s] += vw * v2;
                }
            }
            touched.sort_unstable();
            for &s in &touched {
                indices.push(s);
                values.push(acc[s]);
            }
            indptr[r + 1] = indices.len();
        }
        Csr { nrows: self.nrows, ncols: self.nrows, indptr, indices, values }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).find(|e| e.0 == r).map_or(0.0, |e| e.1)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_dense() {
        let a = Csr::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (1, 2, -1.0), (0, 0, 0.5)]);
        let w = [2.0, 1.0, 0.5];
        let g = a.weighted_gram(&w);
        // rows: [1.5, 0, 2], [0, 3, -1]
        assert_eq!(g.row(0).collect::<Vec<_>>(), vec![(0, 1.5 * 1.5 * 2.0 + 4.0 * 0.5), (1, -1.0)]);
        assert_eq!(g.row(1).collect::<Vec<_>>(), vec![(0, -1.0), (1, 9.0 + 0.5)]);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![3.5, 2.0]);
        assert_eq!(a.transpose().transpose(), a);
    }
}
