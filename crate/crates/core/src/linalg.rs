//! Dense row-major matrices and vectors, plus the small set of decompositions
//! the compressed formats are fitted and verified with.
//!
//! Everything here is `f64`. The dense matvec is the reference every
//! structured kernel is checked against, so it accumulates strictly left to
//! right with no reassociation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seed of the power-iteration start vector used by [`rank1_fit`].
pub const POWER_ITERATION_SEED: u64 = 0x484d_4431_0000_0001;

/// Maximum number of power iterations before [`rank1_fit`] gives up refining.
pub const POWER_ITERATION_MAX_ITERS: usize = 10_000;

/// Relative Rayleigh-quotient change at which power iteration stops.
pub const POWER_ITERATION_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

fn check_finite(data: &[f64], what: &'static str) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// A dense real vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::param("vector must be non-empty"));
        }
        check_finite(&data, "vector")?;
        Ok(RealVector(data))
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "vector must be non-empty");
        RealVector(vec![0.0; len])
    }

    /// Wraps kernel output whose finiteness follows from finite inputs.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        RealVector(data)
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &RealVector) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::shape(self.len(), other.len()));
        }
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
}

impl AsRef<[f64]> for RealVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Row-major `rows x cols` matrix with finite entries.
///
/// ```text
/// [[a, b, c],
///  [d, e, f]]  ->  [a, b, c, d, e, f]
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(
                format!("{} elements for {rows}x{cols}", rows * cols),
                format!("{} elements", data.len()),
            ));
        }
        check_finite(&data, "matrix")?;
        Ok(DenseMatrix { rows, cols, data })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        DenseMatrix::from_raw(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::param("ragged rows"));
        }
        DenseMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix::new(rows, cols, data)
    }

    /// Outer product `p * q^T`.
    pub fn outer(p: &RealVector, q: &RealVector) -> Self {
        let data = p
            .as_slice()
            .iter()
            .flat_map(|&pi| q.as_slice().iter().map(move |&qj| pi * qj))
            .collect();
        DenseMatrix::from_raw(p.len(), q.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DenseMatrix::from_raw(self.cols, self.rows, out)
    }

    /// Copy of the block `rows x cols` starting at `(row0, col0)`.
    pub fn submatrix(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<DenseMatrix> {
        if rows == 0 || cols == 0 || row0 + rows > self.rows || col0 + cols > self.cols {
            return Err(Error::param(format!(
                "block {rows}x{cols} at ({row0},{col0}) outside {}x{}",
                self.rows, self.cols
            )));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for i in row0..row0 + rows {
            data.extend_from_slice(&self.row(i)[col0..col0 + cols]);
        }
        Ok(DenseMatrix::from_raw(rows, cols, data))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                format!("{} rows on the right operand", self.cols),
                other.rows,
            ));
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let out_row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(p)) {
                    *o += a * b;
                }
            }
        }
        Ok(DenseMatrix::from_raw(m, n, out))
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(DenseMatrix::from_raw(self.rows, self.cols, data))
    }

    /// `y = A x`, accumulating each row left to right.
    pub fn matvec(&self, x: &RealVector) -> Result<RealVector> {
        if x.len() != self.cols {
            return Err(Error::shape(self.cols, x.len()));
        }
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x.as_slice(), &mut y);
        Ok(RealVector::from_raw(y))
    }

    /// Allocation-free kernel behind [`DenseMatrix::matvec`].
    ///
    /// Panics if `x` or `y` do not match the matrix shape.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "input length");
        assert_eq!(y.len(), self.rows, "output length");
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *yi = dot(row, x);
        }
    }

    /// `y = A^T x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "input length");
        let mut y = vec![0.0; self.cols];
        for (row, &xi) in self.data.chunks_exact(self.cols).zip(x) {
            for (yj, &a) in y.iter_mut().zip(row) {
                *yj += a * xi;
            }
        }
        y
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub(crate) fn max_abs(data: &[f64]) -> f64 {
    data.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// `sqrt(sum a_ij^2)`.
pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Best rank-1 approximation `u v^T` by power iteration on `A^T A`.
///
/// `v` has unit norm and `u = A v` carries the singular value. The start
/// vector is drawn from [`POWER_ITERATION_SEED`], so the result is a pure
/// function of `a`. A zero matrix yields zero vectors.
pub fn rank1_fit(a: &DenseMatrix) -> (RealVector, RealVector) {
    let (m, n) = (a.rows, a.cols);
    if a.data.iter().all(|&v| v == 0.0) {
        return (RealVector::zeros(m), RealVector::zeros(n));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    // Start inside the row space.
    let mut v = a.matvec_transpose(&w);
    if normalize(&mut v) == 0.0 {
        let best = (0..m)
            .max_by(|&i, &j| dot(a.row(i), a.row(i)).total_cmp(&dot(a.row(j), a.row(j))))
            .unwrap_or(0);
        v = a.row(best).to_vec();
        normalize(&mut v);
    }

    let mut av = vec![0.0; m];
    let mut lambda_prev = f64::NAN;
    for _ in 0..POWER_ITERATION_MAX_ITERS {
        a.matvec_into(&v, &mut av);
        let lambda = dot(&av, &av);
        let mut next = a.matvec_transpose(&av);
        if normalize(&mut next) == 0.0 {
            break;
        }
        v = next;
        if (lambda - lambda_prev).abs() <= POWER_ITERATION_TOL * lambda {
            break;
        }
        lambda_prev = lambda;
    }

    a.matvec_into(&v, &mut av);
    (RealVector::from_raw(av), RealVector::from_raw(v))
}

/// Full thin SVD, singular values sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m x k` left singular vectors.
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    /// `k x n` right singular vectors, one per row.
    pub vt: DenseMatrix,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Orthogonalises the columns of `A` (or of `A^T` when `A` is wide) by plane
/// rotations. Small singular values come out with high relative accuracy,
/// which [`numerical_rank`] depends on.
pub fn svd(a: &DenseMatrix) -> Svd {
    let wide = a.rows < a.cols;
    let work = if wide { a.transpose() } else { a.clone() };
    let (m, n) = (work.rows, work.cols);

    // Column-major copy of the working matrix.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| work.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let k = n;
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    // left vectors of `work`: normalised columns; right vectors: columns of v
    let mut left = vec![0.0; m * k];
    let mut right = vec![0.0; k * n];
    for (slot, &j) in order.iter().enumerate() {
        let s = norms[j];
        for i in 0..m {
            left[i * k + slot] = if s > 0.0 { cols[j][i] / s } else { 0.0 };
        }
        right[slot * n..(slot + 1) * n].copy_from_slice(&v[j]);
    }
    let left = DenseMatrix::from_raw(m, k, left);
    let right = DenseMatrix::from_raw(k, n, right);

    if wide {
        // A = (work)^T = right^T * sigma * left^T
        Svd {
            u: right.transpose(),
            sigma,
            vt: left.transpose(),
        }
    } else {
        Svd { u: left, sigma, vt: right }
    }
}

fn rotate(vecs: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = vecs.split_at_mut(q);
    let (vp, vq) = (&mut head[p], &mut tail[0]);
    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Singular values of `a` in descending order.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    svd(a).sigma
}

/// Best rank-`d` approximation `u * v` with `u: m x d` and `v: d x n`.
///
/// `v` has orthonormal rows; `u` carries the singular values.
pub fn truncated_svd(a: &DenseMatrix, d: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let k = a.rows.min(a.cols);
    if d == 0 || d > k {
        return Err(Error::param(format!("rank {d} outside 1..={k}")));
    }
    let Svd { u, sigma, vt } = svd(a);
    let (m, n) = (a.rows, a.cols);
    let mut uf = vec![0.0; m * d];
    for i in 0..m {
        for j in 0..d {
            uf[i * d + j] = u.get(i, j) * sigma[j];
        }
    }
    let vf = vt.data[..d * n].to_vec();
    Ok((DenseMatrix::from_raw(m, d, uf), DenseMatrix::from_raw(d, n, vf)))
}

/// Number of singular values strictly greater than `tol * sigma_max`.
pub fn numerical_rank(a: &DenseMatrix, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::param(format!("rank tolerance must be positive, got {tol}")));
    }
    let sigma = singular_values(a);
    let smax = sigma.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sigma.iter().filter(|&&s| s > tol * smax).count())
}

/// Seeded uniform `(-scale, scale)` matrix.
pub fn random_matrix(rows: usize, cols: usize, scale: f64, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_matrix_with(&mut rng, rows, cols, scale)
}

pub fn random_matrix_with<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
    let data = (0..rows * cols).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::from_raw(rows, cols, data)
}

pub fn random_vector_with<R: Rng>(rng: &mut R, len: usize, scale: f64) -> RealVector {
    assert!(len > 0, "vector must be non-empty");
    RealVector::from_raw((0..len).map(|_| scale * rng.random_range(-1.0..1.0)).collect())
}
