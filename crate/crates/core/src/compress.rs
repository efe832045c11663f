//! Per-matrix compression: pick the scheme's parameter from a target factor,
//! then fit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmd::{hmd_rank_for_compression, HmdMatrix};
use crate::linalg::DenseMatrix;
use crate::lowrank::{lmf_rank_for_compression, LmfMatrix};
use crate::operator::{OperatorKind, WeightOperator};
use crate::sparse::prune_by_magnitude;

/// Compression scheme applied to a dense weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Hmd,
    Lmf,
    Csr,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Hmd, Scheme::Lmf, Scheme::Csr];

    pub fn kind(self) -> OperatorKind {
        match self {
            Scheme::Hmd => OperatorKind::Hmd,
            Scheme::Lmf => OperatorKind::Lmf,
            Scheme::Csr => OperatorKind::Csr,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind().as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.kind().as_str() == s)
            .ok_or_else(|| Error::param(format!("unknown compression scheme '{s}'")))
    }
}

/// Compresses `a` so that its weight count is at most `m*n / target`.
pub fn compress_matrix(a: &DenseMatrix, scheme: Scheme, target: f64) -> Result<WeightOperator> {
    let (m, n) = (a.rows(), a.cols());
    Ok(match scheme {
        Scheme::Hmd => HmdMatrix::fit(a, hmd_rank_for_compression(m, n, target)?)?.into(),
        Scheme::Lmf => LmfMatrix::fit(a, lmf_rank_for_compression(m, n, target)?)?.into(),
        Scheme::Csr => prune_by_magnitude(a, target)?.into(),
    })
}
