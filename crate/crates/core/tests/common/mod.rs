//! Oracles shared by the integration tests. None of these go through the
//! library's own kernels or decompositions.
#![allow(dead_code)]

use hmd_core::{DenseMatrix, HmdMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Singular values from nalgebra's bidiagonalisation SVD, descending.
pub fn sigma_oracle(a: &DenseMatrix) -> Vec<f64> {
    let m = DMatrix::from_row_slice(a.rows(), a.cols(), a.data());
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Energy left after the best rank-`k` approximation.
pub fn tail_energy(a: &DenseMatrix, k: usize) -> f64 {
    sigma_oracle(a).iter().skip(k).map(|s| s * s).sum()
}

pub fn rank_oracle(a: &DenseMatrix, tol: f64) -> usize {
    let s = sigma_oracle(a);
    let smax = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > tol * smax).count()
}

pub fn scalar_matvec(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    for i in 0..a.rows() {
        let mut acc = 0.0;
        for j in 0..a.cols() {
            acc += a.data()[i * a.cols() + j] * x[j];
        }
        y[i] = acc;
    }
    y
}

pub fn sq_frobenius_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn uniform(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_dense(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::new(m, n, uniform(rng, m * n)).unwrap()
}

pub fn random_hmd(rng: &mut ChaCha8Rng, m: usize, n: usize, r: usize) -> HmdMatrix {
    let lw = n.div_ceil(2);
    HmdMatrix::new(
        m,
        n,
        r,
        uniform(rng, r * n),
        uniform(rng, m - r),
        uniform(rng, lw),
        uniform(rng, m - r),
        uniform(rng, n - lw),
    )
    .unwrap()
}

/// Scalar re-implementation of the HMD matvec that counts every multiply and
/// every add of the two lower-block partial results.
pub fn counted_hmd_matvec(h: &HmdMatrix, x: &[f64]) -> (Vec<f64>, u64) {
    let (m, n, r) = (h.rows(), h.cols(), h.dense_rows());
    let lw = n.div_ceil(2);
    let mut ops = 0u64;
    let mut out = vec![0.0; m];
    for i in 0..r {
        for j in 0..n {
            out[i] += h.a_prime()[i * n + j] * x[j];
            ops += 1;
        }
    }
    let mut t1 = 0.0;
    for j in 0..lw {
        t1 += h.c()[j] * x[j];
        ops += 1;
    }
    let temp1: Vec<f64> = h.b().iter().map(|b| { ops += 1; b * t1 }).collect();
    let mut t2 = 0.0;
    for j in lw..n {
        t2 += h.e()[j - lw] * x[j];
        ops += 1;
    }
    let temp2: Vec<f64> = h.d().iter().map(|d| { ops += 1; d * t2 }).collect();
    for i in 0..m - r {
        out[r + i] = temp1[i] + temp2[i];
        ops += 1;
    }
    (out, ops)
}
