//! Compressed linear operators for recurrent-network inference.
//!
//! The central format is [`HmdMatrix`]: a weight matrix whose top rows are
//! stored densely and whose remaining rows are two side-by-side rank-1
//! blocks. Its matvec never expands the matrix. Dense, low-rank
//! ([`LmfMatrix`]) and magnitude-pruned CSR ([`CsrMatrix`]) operators are
//! provided as baselines, all usable as the weights of an [`LstmCell`].
//!
//! ```
//! use hmd_core::{hmd_rank_for_compression, DenseMatrix, HmdMatrix, RealVector};
//!
//! let a = hmd_core::linalg::random_matrix(64, 32, 1.0, 7);
//! let r = hmd_rank_for_compression(64, 32, 2.0).unwrap();
//! let h = HmdMatrix::fit(&a, r).unwrap();
//! assert!(64.0 * 32.0 / h.param_count() as f64 >= 2.0);
//!
//! let x = RealVector::new(vec![1.0; 32]).unwrap();
//! let fast = h.matvec(&x).unwrap();
//! let slow = h.reconstruct().matvec(&x).unwrap();
//! for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
//!     assert!((a - b).abs() < 1e-12);
//! }
//! # let _ = DenseMatrix::identity(2);
//! ```

pub mod bench;
pub mod compress;
pub mod container;
pub mod error;
pub mod hmd;
pub mod linalg;
pub mod lowrank;
pub mod lstm;
pub mod operator;
pub mod report;
pub mod sparse;

pub use bench::{run_cell_bench, run_matvec_bench, BenchConfig, BenchResult, BenchRow, BenchShape, Preset};
pub use compress::{compress_matrix, Scheme};
pub use container::{load_container, save_container, Container, ContainerError};
pub use error::{Error, Result};
pub use hmd::{hmd_mac_count, hmd_param_count, hmd_rank_for_compression, hmd_storage_ratio, HmdMatrix};
pub use linalg::{frobenius_norm, numerical_rank, rank1_fit, truncated_svd, DenseMatrix, RealVector};
pub use lowrank::{lmf_rank_for_compression, LmfMatrix};
pub use lstm::{LstmCell, LstmState};
pub use operator::{OperatorKind, WeightOperator};
pub use report::{emit_report, parse_report_csv, ReportFormat};
pub use sparse::{prune_by_magnitude, CsrMatrix, CsrStorage};
