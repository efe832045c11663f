//! Magnitude pruning into compressed sparse row storage.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, RealVector};

/// Compressed sparse row matrix. Column indices are `u32`, matching the
/// on-disk index width.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    m: usize,
    n: usize,
    values: Vec<f64>,
    col_idx: Vec<u32>,
    row_ptr: Vec<u32>,
}

/// Storage of a CSR matrix split into weights and index arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsrStorage {
    pub weights: u64,
    /// `nnz` column indices plus `m + 1` row pointers.
    pub index_overhead: u64,
}

impl CsrMatrix {
    pub fn new(m: usize, n: usize, values: Vec<f64>, col_idx: Vec<u32>, row_ptr: Vec<u32>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::param("matrix dimensions must be positive"));
        }
        if n > u32::MAX as usize || values.len() > u32::MAX as usize {
            return Err(Error::param("CSR dimensions exceed 32-bit index range"));
        }
        if row_ptr.len() != m + 1 {
            return Err(Error::shape(format!("{} row pointers", m + 1), row_ptr.len()));
        }
        if values.len() != col_idx.len() {
            return Err(Error::shape(format!("{} column indices", values.len()), col_idx.len()));
        }
        if row_ptr[0] != 0 || row_ptr[m] as usize != values.len() {
            return Err(Error::param("row_ptr must start at 0 and end at nnz"));
        }
        for w in row_ptr.windows(2) {
            if w[0] > w[1] {
                return Err(Error::param("row_ptr must be non-decreasing"));
            }
            let cols = &col_idx[w[0] as usize..w[1] as usize];
            if cols.windows(2).any(|c| c[0] >= c[1]) {
                return Err(Error::param("column indices must increase strictly within a row"));
            }
            if cols.last().is_some_and(|&c| c as usize >= n) {
                return Err(Error::param(format!("column index out of range for {n} columns")));
            }
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("values"));
        }
        if values.contains(&0.0) {
            return Err(Error::param("explicit zeros are not stored"));
        }
        Ok(CsrMatrix { m, n, values, col_idx, row_ptr })
    }

    /// Keeps every nonzero entry of `a`.
    pub fn from_dense(a: &DenseMatrix) -> Self {
        let keep: Vec<bool> = a.data().iter().map(|&v| v != 0.0).collect();
        Self::from_mask(a, &keep)
    }

    fn from_mask(a: &DenseMatrix, keep: &[bool]) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut values = Vec::new();
        let mut col_idx = Vec::new();
        let mut row_ptr = Vec::with_capacity(m + 1);
        row_ptr.push(0u32);
        for i in 0..m {
            for j in 0..n {
                let v = a.get(i, j);
                if keep[i * n + j] && v != 0.0 {
                    values.push(v);
                    col_idx.push(j as u32);
                }
            }
            row_ptr.push(values.len() as u32);
        }
        CsrMatrix { m, n, values, col_idx, row_ptr }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn row_ptr(&self) -> &[u32] {
        &self.row_ptr
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::max_abs(&self.values)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.m * self.n];
        for i in 0..self.m {
            for k in self.row_ptr[i] as usize..self.row_ptr[i + 1] as usize {
                data[i * self.n + self.col_idx[k] as usize] = self.values[k];
            }
        }
        DenseMatrix::from_raw(self.m, self.n, data)
    }

    pub fn matvec(&self, x: &RealVector) -> Result<RealVector> {
        if x.len() != self.n {
            return Err(Error::shape(self.n, x.len()));
        }
        let mut y = vec![0.0; self.m];
        self.matvec_into(x.as_slice(), &mut y);
        Ok(RealVector::from_raw(y))
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n, "input length");
        assert_eq!(y.len(), self.m, "output length");
        for (yi, w) in y.iter_mut().zip(self.row_ptr.windows(2)) {
            let (start, end) = (w[0] as usize, w[1] as usize);
            let mut acc = 0.0;
            for (&v, &c) in self.values[start..end].iter().zip(&self.col_idx[start..end]) {
                acc += v * x[c as usize];
            }
            *yi = acc;
        }
    }

    pub fn storage(&self) -> CsrStorage {
        let nnz = self.nnz() as u64;
        CsrStorage {
            weights: nnz,
            index_overhead: nnz + self.m as u64 + 1,
        }
    }

    /// Weight-only parameter count (`nnz`).
    pub fn param_count(&self) -> u64 {
        self.nnz() as u64
    }

    /// One MAC per stored value.
    pub fn mac_count(&self) -> u64 {
        self.nnz() as u64
    }
}

/// Number of weights kept when pruning an `m x n` matrix to `target`.
pub fn prune_keep_count(m: usize, n: usize, target: f64) -> Result<usize> {
    if target.is_nan() || target < 1.0 {
        return Err(Error::param(format!("pruning target must be >= 1, got {target}")));
    }
    Ok(((m * n) as f64 / target).floor() as usize)
}

/// Keeps the `floor(m*n / target)` largest-magnitude entries.
///
/// Ties in magnitude go to the entry that comes first in row-major order.
/// Kept entries that are exactly zero are still dropped from storage, so
/// `nnz` equals the keep count only when the survivors are nonzero.
pub fn prune_by_magnitude(a: &DenseMatrix, target: f64) -> Result<CsrMatrix> {
    let k = prune_keep_count(a.rows(), a.cols(), target)?;
    let data = a.data();
    let mut order: Vec<usize> = (0..data.len()).collect();
    // stable sort keeps row-major order among equal magnitudes
    order.sort_by(|&i, &j| data[j].abs().total_cmp(&data[i].abs()));
    let mut keep = vec![false; data.len()];
    for &idx in &order[..k] {
        keep[idx] = true;
    }
    Ok(CsrMatrix::from_mask(a, &keep))
}
