mod common;

use common::*;
use hmd_core::linalg::{self, svd};
use hmd_core::{frobenius_norm, numerical_rank, rank1_fit, truncated_svd, DenseMatrix, RealVector};

#[test]
fn matvec_matches_scalar_loop_bitwise() {
    let mut g = rng(1);
    let a = random_dense(&mut g, 8, 8);
    let x = uniform(&mut g, 8);
    let y = a.matvec(&RealVector::new(x.clone()).unwrap()).unwrap();
    let want = scalar_matvec(&a, &x);
    for (got, want) in y.as_slice().iter().zip(&want) {
        assert_eq!(got.to_bits(), want.to_bits());
    }
}

#[test]
fn frobenius_matches_scalar_loop() {
    let mut g = rng(2);
    let a = random_dense(&mut g, 5, 7);
    let mut sum = 0.0;
    for i in 0..5 {
        for j in 0..7 {
            sum += a.get(i, j) * a.get(i, j);
        }
    }
    let want = sum.sqrt();
    assert!((frobenius_norm(&a) - want).abs() < 1e-14 * want);
}

#[test]
fn jacobi_singular_values_match_oracle() {
    let mut g = rng(3);
    for (m, n) in [(12, 12), (20, 7), (7, 20), (1, 5), (5, 1)] {
        let a = random_dense(&mut g, m, n);
        let ours = linalg::singular_values(&a);
        let oracle = sigma_oracle(&a);
        assert_eq!(ours.len(), oracle.len());
        for (s, o) in ours.iter().zip(&oracle) {
            assert!((s - o).abs() < 1e-12 * oracle[0], "{m}x{n}: {s} vs {o}");
        }
    }
}

#[test]
fn rank1_recovers_outer_product() {
    let mut g = rng(4);
    let p = RealVector::new(uniform(&mut g, 9)).unwrap();
    let q = RealVector::new(uniform(&mut g, 6)).unwrap();
    let a = DenseMatrix::outer(&p, &q);
    let (u, v) = rank1_fit(&a);
    let approx = DenseMatrix::outer(&u, &v);
    assert!(sq_frobenius_diff(&a, &approx).sqrt() < 1e-10 * frobenius_norm(&a));
}

#[test]
fn rank1_residual_equals_spectral_tail() {
    let mut g = rng(5);
    for _ in 0..5 {
        let a = random_dense(&mut g, 16, 16);
        let (u, v) = rank1_fit(&a);
        let residual = sq_frobenius_diff(&a, &DenseMatrix::outer(&u, &v));
        let tail = tail_energy(&a, 1);
        assert!((residual - tail).abs() < 1e-8 * tail, "{residual} vs {tail}");
    }
}

#[test]
fn truncated_full_rank_recovers_input() {
    let mut g = rng(6);
    for (m, n) in [(6, 9), (9, 6), (7, 7)] {
        let a = random_dense(&mut g, m, n);
        let (u, v) = truncated_svd(&a, m.min(n)).unwrap();
        let back = u.matmul(&v).unwrap();
        assert!(sq_frobenius_diff(&a, &back).sqrt() < 1e-9 * frobenius_norm(&a));
    }
}

#[test]
fn truncated_rank_one_matches_power_iteration() {
    let mut g = rng(7);
    let a = random_dense(&mut g, 12, 10);
    let (u, v) = truncated_svd(&a, 1).unwrap();
    let svd_err = sq_frobenius_diff(&a, &u.matmul(&v).unwrap()).sqrt();
    let (p, q) = rank1_fit(&a);
    let pow_err = sq_frobenius_diff(&a, &DenseMatrix::outer(&p, &q)).sqrt();
    assert!((svd_err - pow_err).abs() < 1e-9, "{svd_err} vs {pow_err}");
}

#[test]
fn truncated_rank_three_matches_tail() {
    let mut g = rng(8);
    let a = random_dense(&mut g, 10, 10);
    let (u, v) = truncated_svd(&a, 3).unwrap();
    let residual = sq_frobenius_diff(&a, &u.matmul(&v).unwrap());
    let tail = tail_energy(&a, 3);
    assert!((residual - tail).abs() < 1e-7 * tail);
}

#[test]
fn svd_factors_are_orthonormal() {
    let mut g = rng(9);
    let a = random_dense(&mut g, 11, 8);
    let s = svd(&a);
    let vvt = s.vt.matmul(&s.vt.transpose()).unwrap();
    let utu = s.u.transpose().matmul(&s.u).unwrap();
    let eye = DenseMatrix::identity(8);
    assert!(sq_frobenius_diff(&vvt, &eye).sqrt() < 1e-12);
    assert!(sq_frobenius_diff(&utu, &eye).sqrt() < 1e-12);
}

#[test]
fn rank_of_hmd_reconstruction_is_bounded() {
    let mut g = rng(10);
    let h = random_hmd(&mut g, 16, 16, 4);
    let a = h.reconstruct();
    let rank = numerical_rank(&a, 1e-10).unwrap();
    assert!(rank <= 6);
    assert_eq!(rank, rank_oracle(&a, 1e-10));
}
