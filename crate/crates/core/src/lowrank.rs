//! Low-rank factorization baseline: `A ~ U V` with inner rank `d`.

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, RealVector};

/// `U: m x d`, `V: d x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmfMatrix {
    u: DenseMatrix,
    v: DenseMatrix,
}

impl LmfMatrix {
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        if u.cols() != v.rows() {
            return Err(Error::shape(
                format!("V with {} rows", u.cols()),
                format!("{} rows", v.rows()),
            ));
        }
        let d = u.cols();
        if d > u.rows().min(v.cols()) {
            return Err(Error::param(format!(
                "inner rank {d} exceeds min({}, {})",
                u.rows(),
                v.cols()
            )));
        }
        Ok(LmfMatrix { u, v })
    }

    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    pub fn cols(&self) -> usize {
        self.v.cols()
    }

    pub fn inner_rank(&self) -> usize {
        self.u.cols()
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    /// Explicit `U * V`.
    pub fn expand(&self) -> DenseMatrix {
        self.u.matmul(&self.v).expect("factor shapes checked at construction")
    }

    pub fn matvec(&self, x: &RealVector) -> Result<RealVector> {
        if x.len() != self.cols() {
            return Err(Error::shape(self.cols(), x.len()));
        }
        let mut y = vec![0.0; self.rows()];
        self.matvec_into(x.as_slice(), &mut y, &mut vec![0.0; self.inner_rank()]);
        Ok(RealVector::from_raw(y))
    }

    /// `y = U (V x)`; `scratch` holds the length-`d` intermediate.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64], scratch: &mut [f64]) {
        self.v.matvec_into(x, scratch);
        self.u.matvec_into(scratch, y);
    }

    /// `d * (m + n)`.
    pub fn param_count(&self) -> u64 {
        (self.inner_rank() * (self.rows() + self.cols())) as u64
    }

    /// Same as the parameter count: one MAC per stored factor entry.
    pub fn mac_count(&self) -> u64 {
        self.param_count()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }

    /// Frobenius-optimal rank-`d` factorization of `a`.
    pub fn fit(a: &DenseMatrix, d: usize) -> Result<Self> {
        let (u, v) = linalg::truncated_svd(a, d)?;
        LmfMatrix::new(u, v)
    }
}

/// `floor(m*n / (target * (m + n)))`.
pub fn lmf_rank_for_compression(m: usize, n: usize, target: f64) -> Result<usize> {
    if !(target.is_finite() && target >= 1.0) {
        return Err(Error::param(format!("LMF compression target must be >= 1, got {target}")));
    }
    if m == 0 || n == 0 {
        return Err(Error::param("matrix dimensions must be positive"));
    }
    let d = ((m * n) as f64 / (target * (m + n) as f64)).floor() as usize;
    if d == 0 {
        return Err(Error::Infeasible(format!(
            "{m}x{n} cannot reach {target}x with LMF: even d=1 stores {} values",
            m + n
        )));
    }
    Ok(d)
}
