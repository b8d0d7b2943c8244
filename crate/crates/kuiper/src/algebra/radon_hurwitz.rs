use crate::error::{Error, Result};

/// Decomposition `n = 2^(4a+b) (2c+1)` with `b < 4`, together with the
/// Radon-Hurwitz number `rho(n) = 8a + 2^b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RhIndex {
    pub n: usize,
    pub a: u32,
    pub b: u32,
    pub c: usize,
    pub rho: usize,
}

pub fn radon_hurwitz(n: usize) -> Result<RhIndex> {
    if n == 0 {
        return Err(Error::invalid("radon_hurwitz: n must be positive"));
    }
    let m = n.trailing_zeros();
    let odd = n >> m;
    let (a, b) = (m / 4, m % 4);
    Ok(RhIndex { n, a, b, c: (odd - 1) / 2, rho: 8 * a as usize + (1usize << b) })
}

/// Radon-Hurwitz number: the largest dimension of a linear space of
/// real `n x n` matrices whose nonzero members are all invertible.
pub fn rho(n: usize) -> Result<usize> {
    radon_hurwitz(n).map(|r| r.rho)
}

/// `rho(n/2)` for even `n`, zero for odd `n`.
pub fn rho_half(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::invalid("rho_half: n must be positive"));
    }
    if n % 2 == 1 {
        Ok(0)
    } else {
        rho(n / 2)
    }
}

/// Number of primitive directions used by one stage of the scheme in
/// dimension `n`.
///
/// For `n` in `{2, 4, 8, 16}` this is `n(n+1)/2 - rho(n/2)`; every other `n`
/// loses one more direction.
pub fn xi_index(n: usize) -> Result<usize> {
    let full = n * (n + 1) / 2;
    let half = rho_half(n)?;
    let xi = if matches!(n, 2 | 4 | 8 | 16) { full - half } else { full - half - 1 };
    if xi == 0 {
        return Err(Error::invalid(format!("xi_index: n={n} leaves no free directions")));
    }
    Ok(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_radon_hurwitz_numbers() {
        let expect = [1, 2, 1, 4, 1, 2, 1, 8, 1, 2, 1, 4, 1, 2, 1, 9];
        for (i, &r) in expect.iter().enumerate() {
            assert_eq!(rho(i + 1).unwrap(), r, "n={}", i + 1);
        }
        assert_eq!(rho(32).unwrap(), 10);
        assert_eq!(rho(64).unwrap(), 12);
        assert_eq!(rho(256).unwrap(), 17);
    }

    #[test]
    fn xi_table() {
        let got: Vec<_> = (2..=8).map(|n| xi_index(n).unwrap()).collect();
        assert_eq!(got, [2, 5, 8, 14, 19, 27, 32]);
        assert_eq!(xi_index(16).unwrap(), 136 - 8);
    }

    #[test]
    fn degenerate_dimensions_rejected() {
        assert!(rho(0).is_err());
        assert!(xi_index(1).is_err());
    }
}
