//! Vector form of symmetric matrices.
//!
//! A symmetric `n x n` matrix `A` is stored as
//! `[a12, a13, ..., a1n, a23, ..., a(n-1)n, a11, ..., ann]`: the strict
//! upper triangle row by row, then the diagonal. With this layout the
//! Euclidean product of `[A]` and `[x (x) x]` equals `1/2 x^T (A + diag A) x`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn sym_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry `(i, j)` in the vector form (order of `i`, `j` is irrelevant).
pub fn sym_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    if i == j {
        n * (n - 1) / 2 + i
    } else {
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }
}

/// Index pairs `(i, j)` in vector form order.
pub fn sym_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(sym_dim(n));
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out.extend((0..n).map(|i| (i, i)));
    out
}

/// Vector form of a symmetric matrix; rejects matrices whose asymmetry
/// exceeds `1e-12` relative to their largest entry.
pub fn vector_form(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    if !a.is_square() {
        return Err(Error::invalid("vector_form: matrix is not square"));
    }
    let scale = a.amax().max(1.0);
    let asym = (a - a.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(vector_form_unchecked(a))
}

/// Vector form of the upper triangle, without checking symmetry.
pub fn vector_form_unchecked(a: &DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows();
    DVector::from_iterator(sym_dim(n), sym_pairs(n).into_iter().map(|(i, j)| a[(i, j)]))
}

pub fn matrix_form(v: &[f64], n: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), sym_dim(n), "matrix_form: length mismatch");
    let mut m = DMatrix::zeros(n, n);
    for (k, (i, j)) in sym_pairs(n).into_iter().enumerate() {
        m[(i, j)] = v[k];
        m[(j, i)] = v[k];
    }
    m
}

/// `A + diag(A)`: the quadratic form `1/2 x^T doubled(A) x` is the vector
/// form pairing of `A` with `x (x) x`.
pub fn doubled(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = a.clone();
    for i in 0..a.nrows() {
        c[(i, i)] *= 2.0;
    }
    c
}

/// `<[A], [x (x) x]>` computed entrywise from the vector forms.
pub fn pairing(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = a.nrows();
    sym_pairs(n).into_iter().map(|(i, j)| a[(i, j)] * x[i] * x[j]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_matches_definition() {
        let a = DMatrix::from_row_slice(3, 3, &[1., 2., 3., 2., 4., 5., 3., 5., 6.]);
        let v = vector_form(&a).unwrap();
        assert_eq!(v.as_slice(), &[2., 3., 5., 1., 4., 6.]);
        assert_eq!(matrix_form(v.as_slice(), 3), a);
        for (k, (i, j)) in sym_pairs(3).into_iter().enumerate() {
            assert_eq!(sym_index(3, i, j), k);
            assert_eq!(sym_index(3, j, i), k);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1., 2., 2.5, 1.]);
        assert!(matches!(vector_form(&a), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn pairing_is_half_doubled_form() {
        let a = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 2.0]);
        let x = [0.3, -1.2];
        let xv = DVector::from_row_slice(&x);
        let q = 0.5 * (xv.transpose() * doubled(&a) * &xv)[0];
        assert!((pairing(&a, &x) - q).abs() < 1e-15);
    }
}
