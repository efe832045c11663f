//! Single-threaded batch-1 timing of compressed matvecs and LSTM cells.
//!
//! Every scheme row is measured on the same seeded dense weights, compressed
//! per scheme and factor. Timings are per-iteration wall clock with warmup;
//! the report carries the 10th, 50th and 90th percentiles (nearest rank).

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::compress::{compress_matrix, Scheme};
use crate::error::{Error, Result};
use crate::linalg::{random_matrix_with, random_vector_with, RealVector};
use crate::lstm::{LstmCell, LstmState};
use crate::operator::{OperatorKind, WeightOperator};

pub const DEFAULT_FACTORS: [f64; 4] = [2.0, 2.5, 3.33, 5.0];
pub const DEFAULT_WARMUP_ITERS: usize = 10;
pub const DEFAULT_MEASURE_ITERS: usize = 100;
pub const DEFAULT_SEQ_LEN: usize = 1;
pub const DEFAULT_SEED: u64 = 42;

/// Layer shapes of the three reference networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 77 inputs, 179 hidden units.
    Har1,
    /// 113 inputs, 128 hidden units.
    Har2,
    /// 200 inputs, 200 hidden units.
    Ptb,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Har1, Preset::Har2, Preset::Ptb];

    /// `(input_dim, hidden_dim)`.
    pub fn dims(self) -> (usize, usize) {
        match self {
            Preset::Har1 => (77, 179),
            Preset::Har2 => (113, 128),
            Preset::Ptb => (200, 200),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Har1 => "har1",
            Preset::Har2 => "har2",
            Preset::Ptb => "ptb",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::param(format!("unknown preset '{s}'")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchShape {
    /// Raw `rows x cols` weight matrix.
    Matrix { rows: usize, cols: usize },
    /// LSTM layer; the matvec bench uses its fused recurrent matrix
    /// (`4*hidden x hidden`).
    Cell { input_dim: usize, hidden_dim: usize },
}

impl From<Preset> for BenchShape {
    fn from(p: Preset) -> Self {
        let (input_dim, hidden_dim) = p.dims();
        BenchShape::Cell { input_dim, hidden_dim }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub shape: BenchShape,
    pub schemes: Vec<Scheme>,
    pub factors: Vec<f64>,
    pub warmup_iters: usize,
    pub measure_iters: usize,
    pub seq_len: usize,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(shape: impl Into<BenchShape>) -> Self {
        BenchConfig {
            shape: shape.into(),
            schemes: Scheme::ALL.to_vec(),
            factors: DEFAULT_FACTORS.to_vec(),
            warmup_iters: DEFAULT_WARMUP_ITERS,
            measure_iters: DEFAULT_MEASURE_ITERS,
            seq_len: DEFAULT_SEQ_LEN,
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.measure_iters == 0 {
            return Err(Error::param("measure_iters must be at least 1"));
        }
        if self.seq_len == 0 {
            return Err(Error::param("seq_len must be at least 1"));
        }
        if let Some(f) = self.factors.iter().find(|f| !(f.is_finite() && **f > 1.0)) {
            return Err(Error::param(format!("compression factors must be > 1, got {f}")));
        }
        let dims = match self.shape {
            BenchShape::Matrix { rows, cols } => [rows, cols],
            BenchShape::Cell { input_dim, hidden_dim } => [input_dim, hidden_dim],
        };
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::param(format!("dimensions must be at least 2, got {dims:?}")));
        }
        Ok(())
    }

    fn matrix_dims(&self) -> (usize, usize) {
        match self.shape {
            BenchShape::Matrix { rows, cols } => (rows, cols),
            BenchShape::Cell { hidden_dim, .. } => (4 * hidden_dim, hidden_dim),
        }
    }

    fn cell_dims(&self) -> (usize, usize) {
        match self.shape {
            BenchShape::Matrix { rows, cols } => (rows, cols),
            BenchShape::Cell { input_dim, hidden_dim } => (input_dim, hidden_dim),
        }
    }
}

/// One measured row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub scheme: OperatorKind,
    /// Requested factor; `1.0` for the dense baseline.
    pub factor: f64,
    /// Dense weight count over stored weight count.
    pub achieved_factor: f64,
    pub params: u64,
    pub macs: u64,
    /// Index words read per run (CSR only); not part of the CSV columns.
    pub index_loads: u64,
    pub median_ns: u64,
    pub p10_ns: u64,
    pub p90_ns: u64,
    pub speedup_vs_dense: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchRow {
    Measured(BenchResult),
    /// The scheme cannot reach the factor on this shape.
    Infeasible {
        scheme: OperatorKind,
        factor: f64,
        reason: String,
    },
}

impl BenchRow {
    pub fn scheme(&self) -> OperatorKind {
        match self {
            BenchRow::Measured(r) => r.scheme,
            BenchRow::Infeasible { scheme, .. } => *scheme,
        }
    }

    pub fn factor(&self) -> f64 {
        match self {
            BenchRow::Measured(r) => r.factor,
            BenchRow::Infeasible { factor, .. } => *factor,
        }
    }

    pub fn measured(&self) -> Option<&BenchResult> {
        match self {
            BenchRow::Measured(r) => Some(r),
            BenchRow::Infeasible { .. } => None,
        }
    }
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[u64], p: f64) -> u64 {
    assert!(!sorted.is_empty(), "no samples");
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

struct Timing {
    median: u64,
    p10: u64,
    p90: u64,
}

fn time_iterations(warmup: usize, iters: usize, mut f: impl FnMut()) -> Timing {
    for _ in 0..warmup {
        f();
    }
    let mut samples: Vec<u64> = (0..iters)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_nanos() as u64
        })
        .collect();
    samples.sort_unstable();
    Timing {
        median: percentile(&samples, 50.0),
        p10: percentile(&samples, 10.0),
        p90: percentile(&samples, 90.0),
    }
}

struct Candidate<T> {
    kind: OperatorKind,
    factor: f64,
    built: std::result::Result<T, Error>,
}

fn collect_rows<T>(
    dense: T,
    candidates: Vec<Candidate<T>>,
    mut measure: impl FnMut(&T) -> Timing,
    counts: impl Fn(&T) -> (u64, u64, u64, u64),
) -> Result<Vec<BenchRow>> {
    let (dense_weights, dense_params, dense_macs, _) = counts(&dense);
    let base = measure(&dense);
    let mut rows = vec![BenchRow::Measured(BenchResult {
        scheme: OperatorKind::Dense,
        factor: 1.0,
        achieved_factor: 1.0,
        params: dense_params,
        macs: dense_macs,
        index_loads: 0,
        median_ns: base.median,
        p10_ns: base.p10,
        p90_ns: base.p90,
        speedup_vs_dense: 1.0,
    })];
    for c in candidates {
        match c.built {
            Ok(item) => {
                let t = measure(&item);
                let (weights, params, macs, index_loads) = counts(&item);
                rows.push(BenchRow::Measured(BenchResult {
                    scheme: c.kind,
                    factor: c.factor,
                    achieved_factor: dense_weights as f64 / weights as f64,
                    params,
                    macs,
                    index_loads,
                    median_ns: t.median,
                    p10_ns: t.p10,
                    p90_ns: t.p90,
                    speedup_vs_dense: base.median as f64 / t.median.max(1) as f64,
                }));
            }
            Err(Error::Infeasible(reason)) => rows.push(BenchRow::Infeasible {
                scheme: c.kind,
                factor: c.factor,
                reason,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Times `y = W x` for the dense baseline and every `(scheme, factor)` pair.
pub fn run_matvec_bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let (m, n) = config.matrix_dims();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let a = random_matrix_with(&mut rng, m, n, 1.0 / (n as f64).sqrt());
    let x = random_vector_with(&mut rng, n, 1.0);

    let mut candidates = Vec::new();
    for &scheme in &config.schemes {
        for &factor in &config.factors {
            candidates.push(Candidate {
                kind: scheme.kind(),
                factor,
                built: compress_matrix(&a, scheme, factor),
            });
        }
    }
    let mut y = vec![0.0; m];
    collect_rows(
        WeightOperator::Dense(a),
        candidates,
        |op: &WeightOperator| {
            let mut scratch = vec![0.0; op.scratch_len()];
            time_iterations(config.warmup_iters, config.measure_iters, || {
                op.matvec_into(black_box(x.as_slice()), &mut y, &mut scratch);
                black_box(&y);
            })
        },
        |op| {
            let p = op.param_count();
            (p, p, op.mac_count(), op.index_loads())
        },
    )
}

/// Seeded dense LSTM cell with weights uniform in `(-1/sqrt(h), 1/sqrt(h))`.
pub fn random_cell(input_dim: usize, hidden_dim: usize, seed: u64) -> LstmCell {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_cell_with(&mut rng, input_dim, hidden_dim)
}

fn random_cell_with(rng: &mut ChaCha8Rng, input_dim: usize, hidden_dim: usize) -> LstmCell {
    let scale = 1.0 / (hidden_dim as f64).sqrt();
    let gates = 4 * hidden_dim;
    let w_x = random_matrix_with(rng, gates, input_dim, scale);
    let w_h = random_matrix_with(rng, gates, hidden_dim, scale);
    let bias = random_vector_with(rng, gates, scale);
    LstmCell::new(w_x.into(), w_h.into(), bias).expect("shapes are consistent")
}

/// Times a full forward pass over `seq_len` steps from the zero state.
pub fn run_cell_bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let (input_dim, hidden_dim) = config.cell_dims();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cell = random_cell_with(&mut rng, input_dim, hidden_dim);
    let sequence: Vec<RealVector> = (0..config.seq_len)
        .map(|_| random_vector_with(&mut rng, input_dim, 1.0))
        .collect();
    let init = LstmState::zeros(hidden_dim);

    let mut candidates = Vec::new();
    for &scheme in &config.schemes {
        for &factor in &config.factors {
            candidates.push(Candidate {
                kind: scheme.kind(),
                factor,
                built: cell.compress(scheme, factor),
            });
        }
    }
    let seq_len = config.seq_len;
    collect_rows(
        cell,
        candidates,
        |c: &LstmCell| {
            time_iterations(config.warmup_iters, config.measure_iters, || {
                let states = c.forward(black_box(&sequence), &init).expect("shapes checked");
                black_box(states);
            })
        },
        |c| {
            let loads = seq_len as u64 * (c.w_x().index_loads() + c.w_h().index_loads());
            (c.weight_param_count(), c.param_count(), c.mac_count(seq_len), loads)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(shape: impl Into<BenchShape>) -> BenchConfig {
        BenchConfig {
            warmup_iters: 1,
            measure_iters: 5,
            ..BenchConfig::new(shape)
        }
    }

    #[test]
    fn percentile_nearest_rank() {
        let s: Vec<u64> = (1..=10).collect();
        assert_eq!(percentile(&s, 50.0), 5);
        assert_eq!(percentile(&s, 10.0), 1);
        assert_eq!(percentile(&s, 90.0), 9);
        assert_eq!(percentile(&[7], 90.0), 7);
    }

    #[test]
    fn dense_only_speedup_is_one() {
        let mut cfg = quick(BenchShape::Matrix { rows: 32, cols: 16 });
        cfg.schemes.clear();
        let rows = run_matvec_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let r = rows[0].measured().unwrap();
        assert_eq!(r.speedup_vs_dense, 1.0);
        assert_eq!((r.params, r.macs), (512, 512));
    }

    #[test]
    fn matvec_rows_carry_module_counts() {
        let mut cfg = quick(BenchShape::Matrix { rows: 256, cols: 256 });
        cfg.factors = vec![2.0];
        let rows = run_matvec_bench(&cfg).unwrap();
        let get = |k| rows.iter().find(|r| r.scheme() == k).unwrap().measured().unwrap().clone();
        assert_eq!(get(OperatorKind::Dense).macs, 65_536);
        let hmd = get(OperatorKind::Hmd);
        assert_eq!(hmd.macs, crate::hmd::hmd_mac_count(256, 256, 125));
        assert_eq!(get(OperatorKind::Lmf).macs, 32_768);
        let csr = get(OperatorKind::Csr);
        assert_eq!(csr.params, 32_768);
        assert!(hmd.macs + hmd.index_loads < csr.macs + csr.index_loads);
        for r in rows.iter().filter_map(BenchRow::measured) {
            assert!(r.p10_ns <= r.median_ns && r.median_ns <= r.p90_ns);
            assert!(r.achieved_factor >= r.factor);
        }
    }

    #[test]
    fn infeasible_rows_are_reported() {
        let mut cfg = quick(BenchShape::Matrix { rows: 4, cols: 4 });
        cfg.factors = vec![100.0];
        let rows = run_matvec_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[1..3].iter().all(|r| r.measured().is_none()));
        // pruning always succeeds, down to an empty matrix
        assert_eq!(rows[3].measured().unwrap().params, 0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = quick(Preset::Ptb);
        cfg.factors = vec![1.0];
        assert!(run_cell_bench(&cfg).is_err());
        let mut cfg = quick(Preset::Ptb);
        cfg.measure_iters = 0;
        assert!(cfg.validate().is_err());
        assert!(quick(BenchShape::Matrix { rows: 1, cols: 8 }).validate().is_err());
    }

    #[test]
    fn ptb_cell_meets_factor() {
        let mut cfg = quick(Preset::Ptb);
        cfg.factors = vec![2.0];
        cfg.schemes = vec![Scheme::Hmd, Scheme::Lmf];
        let rows = run_cell_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for r in rows.iter().filter_map(BenchRow::measured) {
            assert!(r.achieved_factor >= r.factor);
        }
    }
}
