//! Hybrid matrix decomposition.
//!
//! An `m x n` matrix is stored as a dense upper block `A'` of `r` rows and a
//! lower `(m - r) x n` block that is two rank-1 blocks side by side:
//!
//! ```text
//!          n/2 (ceil)     n/2 (floor)
//!      +---------------+---------------+
//!   r  |               A'              |
//!      +---------------+---------------+
//! m-r  |     B * C     |     D * E     |
//!      +---------------+---------------+
//! ```
//!
//! `B` and `D` are column vectors of length `m - r`, `C` is a row of length
//! `ceil(n / 2)` and `E` a row of length `floor(n / 2)`.

use crate::error::{Error, Result};
use crate::linalg::{self, dot, DenseMatrix, RealVector};

/// Compressed matrix in hybrid (dense-top, rank-1-bottom) form.
#[derive(Debug, Clone, PartialEq)]
pub struct HmdMatrix {
    m: usize,
    n: usize,
    r: usize,
    a_prime: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    e: Vec<f64>,
}

/// Column split point: `C` covers `[0, left_width(n))`, `E` the rest.
pub fn left_width(n: usize) -> usize {
    n.div_ceil(2)
}

fn check_dims(m: usize, n: usize, r: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param(format!("HMD needs at least 2 columns, got {n}")));
    }
    if r >= m {
        return Err(Error::param(format!(
            "dense block rows must satisfy 0 <= r < m, got r={r}, m={m}"
        )));
    }
    Ok(())
}

impl HmdMatrix {
    /// Builds an HMD matrix from its five arrays. `a_prime` is row-major
    /// `r x n`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: usize,
        n: usize,
        r: usize,
        a_prime: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        d: Vec<f64>,
        e: Vec<f64>,
    ) -> Result<Self> {
        check_dims(m, n, r)?;
        let lw = left_width(n);
        let expect = [
            ("a_prime", a_prime.len(), r * n),
            ("b", b.len(), m - r),
            ("c", c.len(), lw),
            ("d", d.len(), m - r),
            ("e", e.len(), n - lw),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::shape(
                    format!("{name} of length {want}"),
                    format!("length {got}"),
                ));
            }
        }
        for (name, arr) in [("a_prime", &a_prime), ("b", &b), ("c", &c), ("d", &d), ("e", &e)] {
            if !arr.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(name));
            }
        }
        Ok(HmdMatrix { m, n, r, a_prime, b, c, d, e })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// Number of rows in the dense block.
    pub fn dense_rows(&self) -> usize {
        self.r
    }

    pub fn a_prime(&self) -> &[f64] {
        &self.a_prime
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    /// The five stored arrays in storage order.
    pub fn arrays(&self) -> [&[f64]; 5] {
        [&self.a_prime, &self.b, &self.c, &self.d, &self.e]
    }

    pub fn max_abs(&self) -> f64 {
        self.arrays().iter().fold(0.0, |m, a| m.max(linalg::max_abs(a)))
    }

    /// Expands to the full `m x n` matrix: `A'` on top, `[B*C | D*E]` below.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = (self.m, self.n);
        let mut data = Vec::with_capacity(m * n);
        data.extend_from_slice(&self.a_prime);
        for (&bi, &di) in self.b.iter().zip(&self.d) {
            data.extend(self.c.iter().map(|&cj| bi * cj));
            data.extend(self.e.iter().map(|&ej| di * ej));
        }
        debug_assert_eq!(data.len(), m * n);
        DenseMatrix::from_raw(m, n, data)
    }

    pub fn matvec(&self, x: &RealVector) -> Result<RealVector> {
        if x.len() != self.n {
            return Err(Error::shape(self.n, x.len()));
        }
        let mut y = vec![0.0; self.m];
        self.matvec_into(x.as_slice(), &mut y);
        Ok(RealVector::from_raw(y))
    }

    /// `y = A x` without expanding the matrix.
    ///
    /// The dense block is a plain row-major GEMV; the lower rows reduce to two
    /// dot products followed by two scaled vector adds.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n, "input length");
        assert_eq!(y.len(), self.m, "output length");
        let (top, bottom) = y.split_at_mut(self.r);
        if self.r > 0 {
            for (yi, row) in top.iter_mut().zip(self.a_prime.chunks_exact(self.n)) {
                *yi = dot(row, x);
            }
        }
        let (x_left, x_right) = x.split_at(left_width(self.n));
        let t1 = dot(&self.c, x_left);
        let t2 = dot(&self.e, x_right);
        for ((yi, &bi), &di) in bottom.iter_mut().zip(&self.b).zip(&self.d) {
            *yi = bi * t1 + di * t2;
        }
    }

    /// Stored element count, `r*n + 2*(m - r) + n`.
    pub fn param_count(&self) -> u64 {
        hmd_param_count(self.m, self.n, self.r)
    }

    /// Multiply-accumulate count of [`HmdMatrix::matvec_into`].
    pub fn mac_count(&self) -> u64 {
        hmd_mac_count(self.m, self.n, self.r)
    }

    /// Projects a dense matrix onto the hybrid structure.
    ///
    /// The top `r` rows are copied verbatim. Each lower block is replaced by
    /// its best rank-1 approximation, with the row factor (`C` or `E`) scaled
    /// to unit norm and a non-negative leading entry.
    pub fn fit(a: &DenseMatrix, r: usize) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        check_dims(m, n, r)?;
        let lw = left_width(n);
        let a_prime = a.data()[..r * n].to_vec();
        let left = a.submatrix(r, 0, m - r, lw)?;
        let right = a.submatrix(r, lw, m - r, n - lw)?;
        let (b, c) = canonical_rank1(&left);
        let (d, e) = canonical_rank1(&right);
        HmdMatrix::new(m, n, r, a_prime, b, c, d, e)
    }
}

fn canonical_rank1(block: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let (u, v) = linalg::rank1_fit(block);
    let (mut u, mut v) = (u.into_vec(), v.into_vec());
    if v.iter().find(|&&x| x != 0.0).is_some_and(|&x| x < 0.0) {
        u.iter_mut().for_each(|x| *x = -*x);
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (u, v)
}

/// `r*n + 2*(m - r) + n`: the denominator of the storage ratio.
pub fn hmd_param_count(m: usize, n: usize, r: usize) -> u64 {
    (r * n + 2 * (m - r) + n) as u64
}

/// `r*n + 2*(n/2 + m - r) + (m - r)` with `2*(n/2) = n` for any `n`.
pub fn hmd_mac_count(m: usize, n: usize, r: usize) -> u64 {
    (r * n + n + 2 * (m - r) + (m - r)) as u64
}

/// Storage reduction `m*n / (r*n + 2*(m - r + n/2))`.
pub fn hmd_storage_ratio(m: usize, n: usize, r: usize) -> Result<f64> {
    check_dims(m, n, r)?;
    let (mf, nf, rf) = (m as f64, n as f64, r as f64);
    Ok(mf * nf / (rf * nf + 2.0 * (mf - rf + nf / 2.0)))
}

/// Operation reduction `m*n / mac_count`.
pub fn hmd_op_ratio(m: usize, n: usize, r: usize) -> Result<f64> {
    check_dims(m, n, r)?;
    Ok((m * n) as f64 / hmd_mac_count(m, n, r) as f64)
}

/// Largest dense-block height whose storage ratio is at least `target`.
pub fn hmd_rank_for_compression(m: usize, n: usize, target: f64) -> Result<usize> {
    if !(target.is_finite() && target > 1.0) {
        return Err(Error::param(format!("HMD compression target must be > 1, got {target}")));
    }
    check_dims(m, n, 0)?;
    let dense = (m * n) as f64;
    let meets = |r: usize| dense / hmd_param_count(m, n, r) as f64 >= target;
    if !meets(0) {
        return Err(Error::Infeasible(format!(
            "{m}x{n} cannot reach {target}x with HMD: r=0 already stores {} values",
            hmd_param_count(m, n, 0)
        )));
    }
    // param count is non-decreasing in r, so the feasible set is a prefix
    let (mut lo, mut hi) = (0, m - 1);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if meets(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(lo)
}
