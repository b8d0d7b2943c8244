use kuiper::algebra::{
    build_invertible_space, certify_invertible, choose_l, dual_space, find_primitive_frame, kronecker_sum,
    load_or_find_frame, CertifyOptions, FrameSearch, MatrixSpace,
};
use kuiper::{rho, xi_index, Error};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn published_index_table() {
    let rho8: Vec<usize> = (1..=8).map(|n| rho(n).unwrap()).collect();
    assert_eq!(rho8, [1, 2, 1, 4, 1, 2, 1, 8]);
    assert_eq!(rho(16).unwrap(), 9);
    let xi: Vec<usize> = (2..=8).map(|n| xi_index(n).unwrap()).collect();
    assert_eq!(xi, [2, 5, 8, 14, 19, 27, 32]);
    // 16 * 17 / 2 - rho(8)
    assert_eq!(xi_index(16).unwrap(), 128);
}

#[test]
fn frames_reconstruct_the_dual_space() {
    for n in [2usize, 3, 5, 6] {
        let l = choose_l(n).unwrap();
        let frame = find_primitive_frame(&l, &FrameSearch::default()).unwrap();
        assert_eq!(frame.len(), xi_index(n).unwrap());
        let dual = dual_space(&l).unwrap();
        assert_eq!(dual.ncols(), frame.len());
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for _ in 0..10 {
            let c = DVector::from_fn(dual.ncols(), |_, _| rng.random_range(-1.0..1.0));
            let v = &dual * c;
            let back = frame.combine(&frame.coordinates(v.as_slice()));
            let err = back.iter().zip(v.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-9 * v.amax(), "n={n}: {err:e}");
        }
    }
}

#[test]
fn off_diagonal_spaces_have_a_deficient_null_cone() {
    // For L spanned by [[0, A], [A^T, 0]] with A running over an invertible
    // family, x^T y = 0 and x^T A y = 0 force x = 0 or y = 0 once the family
    // has two members, so only block-diagonal rank one matrices lie in the dual.
    for (n, rank) in [(4usize, 6usize), (8, 20)] {
        match find_primitive_frame(&MatrixSpace::w_minus(n).unwrap(), &FrameSearch::default()) {
            Err(Error::FrameNotFound { rank: r, needed, .. }) => {
                assert_eq!((r, needed), (rank, xi_index(n).unwrap()));
            }
            other => panic!("n={n}: expected a rank deficiency, got {other:?}"),
        }
    }
}

#[test]
fn kronecker_sum_eigenvalues_are_pairwise_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [4usize, 8, 16] {
        let d = 2;
        let m = n / d;
        let s = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        let a = &s + s.transpose();
        let b = DMatrix::from_row_slice(2, 2, &[0.3, 0.7, 0.7, -0.2]);
        let ks = kronecker_sum(&a, &b);
        let ea = SymmetricEigen::new(a).eigenvalues;
        let eb = SymmetricEigen::new(b).eigenvalues;
        let mut sums: Vec<f64> = ea.iter().flat_map(|x| eb.iter().map(move |y| x + y)).collect();
        let mut eig: Vec<f64> = SymmetricEigen::new(ks).eigenvalues.iter().copied().collect();
        sums.sort_by(f64::total_cmp);
        eig.sort_by(f64::total_cmp);
        for (x, y) in sums.iter().zip(&eig) {
            assert!((x - y).abs() < 1e-12, "n={n}");
        }
    }
}

#[test]
fn invertible_families_have_radon_hurwitz_size() {
    for n in 1..=32 {
        assert_eq!(build_invertible_space(n).unwrap().len(), rho(n).unwrap(), "n={n}");
    }
}

#[test]
fn certified_margins_are_reproducible() {
    let l = choose_l(6).unwrap();
    let opts = CertifyOptions::default();
    let m1 = certify_invertible(&l, &opts).unwrap();
    let m2 = certify_invertible(&l, &opts).unwrap();
    assert_eq!(m1, m2);
    assert!((m1 - l.margin.unwrap()).abs() < 1e-12);
}

#[test]
fn frame_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let l = choose_l(3).unwrap();
    let a = load_or_find_frame(&l, Some(dir.path()), &FrameSearch::default()).unwrap();
    let entries = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(entries, 1);
    let b = load_or_find_frame(&l, Some(dir.path()), &FrameSearch { restarts: 0, ..FrameSearch::default() }).unwrap();
    for (x, y) in a.xi.iter().zip(&b.xi) {
        assert!((x - y).amax() < 1e-15);
    }
}
