mod common;

use common::*;
use hmd_core::hmd::{hmd_op_ratio, left_width};
use hmd_core::{
    hmd_mac_count, hmd_param_count, hmd_rank_for_compression, hmd_storage_ratio, lmf_rank_for_compression,
    numerical_rank, HmdMatrix, RealVector,
};
use rand::Rng;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn matvec_matches_reconstruction_oracle() {
    let mut g = rng(100);
    for _ in 0..1000 {
        let m = g.random_range(2..=96);
        let n = g.random_range(2..=96);
        let r = g.random_range(0..m);
        let h = random_hmd(&mut g, m, n, r);
        let x = uniform(&mut g, n);
        let fast = h.matvec(&RealVector::new(x.clone()).unwrap()).unwrap();
        let dense = h.reconstruct();
        let slow = scalar_matvec(&dense, &x);
        let tol = 1e-12 * n as f64 * dense.max_abs().max(1e-300) * max_abs(&x).max(1.0);
        for (a, b) in fast.as_slice().iter().zip(&slow) {
            assert!((a - b).abs() <= tol, "m={m} n={n} r={r}: {a} vs {b}");
        }
    }
}

#[test]
fn param_count_equals_stored_lengths() {
    let mut g = rng(101);
    for _ in 0..200 {
        let m = g.random_range(2..=64);
        let n = g.random_range(2..=64);
        let r = g.random_range(0..m);
        let h = random_hmd(&mut g, m, n, r);
        let stored: usize = h.arrays().iter().map(|a| a.len()).sum();
        assert_eq!(h.param_count(), stored as u64);
    }
}

#[test]
fn mac_count_equals_instrumented_count() {
    let mut g = rng(102);
    for _ in 0..200 {
        let m = g.random_range(2..=64);
        let n = g.random_range(2..=64);
        let r = g.random_range(0..m);
        let h = random_hmd(&mut g, m, n, r);
        let x = uniform(&mut g, n);
        let (y, ops) = counted_hmd_matvec(&h, &x);
        assert_eq!(h.mac_count(), ops);
        let fast = h.matvec(&RealVector::new(x).unwrap()).unwrap();
        for (a, b) in fast.as_slice().iter().zip(&y) {
            assert!((a - b).abs() < 1e-12 * n as f64);
        }
    }
}

#[test]
fn reference_counts() {
    assert_eq!(hmd_param_count(256, 256, 128), 33_280);
    assert_eq!(hmd_mac_count(256, 256, 128), 33_408);
    assert!((hmd_op_ratio(256, 256, 128).unwrap() - 1.9617).abs() < 5e-5);
}

#[test]
fn lower_blocks_are_rank_one() {
    let mut g = rng(103);
    for _ in 0..20 {
        let m = g.random_range(3..=24);
        let n = g.random_range(4..=24);
        let r = g.random_range(0..m - 1);
        let a = random_hmd(&mut g, m, n, r).reconstruct();
        let lw = left_width(n);
        let left = a.submatrix(r, 0, m - r, lw).unwrap();
        let right = a.submatrix(r, lw, m - r, n - lw).unwrap();
        assert!(rank_oracle(&left, 1e-10) <= 1);
        assert!(rank_oracle(&right, 1e-10) <= 1);
    }
}

#[test]
fn rank_bound_holds() {
    let mut g = rng(104);
    for _ in 0..100 {
        let m = g.random_range(2..=40);
        let n = g.random_range(2..=40);
        let r = g.random_range(0..m);
        let a = random_hmd(&mut g, m, n, r).reconstruct();
        let rank = numerical_rank(&a, 1e-10).unwrap();
        assert!(rank <= r + 2, "m={m} n={n} r={r}: rank {rank}");
        assert!(rank_oracle(&a, 1e-10) <= r + 2);
    }
}

#[test]
fn fit_is_idempotent_on_hmd_input() {
    let mut g = rng(105);
    for (m, n, r) in [(16, 16, 4), (9, 7, 0), (12, 5, 11)] {
        let a = random_hmd(&mut g, m, n, r).reconstruct();
        let back = HmdMatrix::fit(&a, r).unwrap().reconstruct();
        assert!(sq_frobenius_diff(&a, &back).sqrt() < 1e-9 * a.frobenius_norm());
    }
}

#[test]
fn fit_residual_equals_block_tails() {
    let mut g = rng(106);
    let a = random_dense(&mut g, 16, 16);
    let h = HmdMatrix::fit(&a, 8).unwrap();
    let residual = sq_frobenius_diff(&a, &h.reconstruct());
    let tails = tail_energy(&a.submatrix(8, 0, 8, 8).unwrap(), 1) + tail_energy(&a.submatrix(8, 8, 8, 8).unwrap(), 1);
    assert!((residual - tails).abs() < 1e-7 * tails);
}

#[test]
fn fit_rejects_bad_shapes() {
    let mut g = rng(107);
    let a = random_dense(&mut g, 4, 4);
    assert!(HmdMatrix::fit(&a, 4).is_err());
    assert!(HmdMatrix::fit(&random_dense(&mut g, 4, 1), 0).is_err());
}

#[test]
fn storage_ratio_decreases_with_dense_rows() {
    for (m, n) in [(256, 256), (716, 179), (10, 3)] {
        let ratios: Vec<f64> = (0..m).map(|r| hmd_storage_ratio(m, n, r).unwrap()).collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{m}x{n}");
    }
}

#[test]
fn planner_is_tight() {
    let mut g = rng(108);
    for _ in 0..300 {
        let m = g.random_range(2..=600);
        let n = g.random_range(3..=600);
        let target = g.random_range(1.01..6.0);
        match hmd_rank_for_compression(m, n, target) {
            Ok(r) => {
                let dense = (m * n) as f64;
                assert!(dense / hmd_param_count(m, n, r) as f64 >= target);
                if r + 1 < m {
                    assert!(dense / (hmd_param_count(m, n, r + 1) as f64) < target);
                }
            }
            Err(_) => assert!(((m * n) as f64) / (hmd_param_count(m, n, 0) as f64) < target),
        }
    }
}

#[test]
fn hmd_keeps_more_rank_than_lmf_at_equal_budget() {
    for m in [128, 256, 512] {
        let r = hmd_rank_for_compression(m, m, 2.0).unwrap();
        let d = lmf_rank_for_compression(m, m, 2.0).unwrap();
        assert!(r + 2 > d, "m={m}: r={r}, d={d}");
    }
}
