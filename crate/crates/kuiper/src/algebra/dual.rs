use nalgebra::{DMatrix, DVector};

use super::space::MatrixSpace;
use super::vector_form::sym_dim;
use crate::error::Result;

/// Orthonormal basis (columns) of the orthogonal complement of the vector
/// forms of `space`, i.e. of the symmetric matrices annihilated by `L`.
pub fn dual_space(space: &MatrixSpace) -> Result<DMatrix<f64>> {
    let eta = space.eta()?;
    let big_n = sym_dim(space.n);
    let mut basis: Vec<DVector<f64>> = eta.column_iter().map(|c| c.into_owned()).collect();
    let d = basis.len();
    for k in 0..big_n {
        let mut v = DVector::zeros(big_n);
        v[k] = 1.0;
        for _ in 0..2 {
            for q in &basis {
                let p = q.dot(&v);
                v -= q * p;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            basis.push(v / nv);
        }
    }
    debug_assert_eq!(basis.len(), big_n);
    Ok(DMatrix::from_columns(&basis[d..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::choose_l;

    #[test]
    fn complement_is_orthogonal_and_full() {
        for n in 2..=7 {
            let l = choose_l(n).unwrap();
            let dual = dual_space(&l).unwrap();
            let eta = l.eta().unwrap();
            assert_eq!(dual.ncols() + eta.ncols(), sym_dim(n));
            assert!((eta.transpose() * &dual).amax() < 1e-12);
            let gram = dual.transpose() * &dual;
            assert!((gram - DMatrix::identity(dual.ncols(), dual.ncols())).amax() < 1e-12);
        }
    }
}
