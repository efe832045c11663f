//! A weight matrix in any of the supported storage formats.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmd::HmdMatrix;
use crate::linalg::{DenseMatrix, RealVector};
use crate::lowrank::LmfMatrix;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Dense,
    Hmd,
    Lmf,
    Csr,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 4] = [Self::Dense, Self::Hmd, Self::Lmf, Self::Csr];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dense => "dense",
            Self::Hmd => "hmd",
            Self::Lmf => "lmf",
            Self::Csr => "csr",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::param(format!("unknown operator kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightOperator {
    Dense(DenseMatrix),
    Hmd(HmdMatrix),
    Lmf(LmfMatrix),
    Csr(CsrMatrix),
}

impl From<DenseMatrix> for WeightOperator {
    fn from(a: DenseMatrix) -> Self {
        WeightOperator::Dense(a)
    }
}

impl From<HmdMatrix> for WeightOperator {
    fn from(h: HmdMatrix) -> Self {
        WeightOperator::Hmd(h)
    }
}

impl From<LmfMatrix> for WeightOperator {
    fn from(l: LmfMatrix) -> Self {
        WeightOperator::Lmf(l)
    }
}

impl From<CsrMatrix> for WeightOperator {
    fn from(s: CsrMatrix) -> Self {
        WeightOperator::Csr(s)
    }
}

impl WeightOperator {
    pub fn kind(&self) -> OperatorKind {
        match self {
            Self::Dense(_) => OperatorKind::Dense,
            Self::Hmd(_) => OperatorKind::Hmd,
            Self::Lmf(_) => OperatorKind::Lmf,
            Self::Csr(_) => OperatorKind::Csr,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Self::Dense(a) => a.rows(),
            Self::Hmd(h) => h.rows(),
            Self::Lmf(l) => l.rows(),
            Self::Csr(s) => s.rows(),
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            Self::Dense(a) => a.cols(),
            Self::Hmd(h) => h.cols(),
            Self::Lmf(l) => l.cols(),
            Self::Csr(s) => s.cols(),
        }
    }

    /// Stored weights; index arrays of CSR are not included.
    pub fn param_count(&self) -> u64 {
        match self {
            Self::Dense(a) => (a.rows() * a.cols()) as u64,
            Self::Hmd(h) => h.param_count(),
            Self::Lmf(l) => l.param_count(),
            Self::Csr(s) => s.param_count(),
        }
    }

    pub fn mac_count(&self) -> u64 {
        match self {
            Self::Dense(a) => (a.rows() * a.cols()) as u64,
            Self::Hmd(h) => h.mac_count(),
            Self::Lmf(l) => l.mac_count(),
            Self::Csr(s) => s.mac_count(),
        }
    }

    /// Index words read per matvec; nonzero only for CSR.
    pub fn index_loads(&self) -> u64 {
        match self {
            Self::Csr(s) => s.storage().index_overhead,
            _ => 0,
        }
    }

    /// Dense equivalent of the stored operator.
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Self::Dense(a) => a.clone(),
            Self::Hmd(h) => h.reconstruct(),
            Self::Lmf(l) => l.expand(),
            Self::Csr(s) => s.to_dense(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Self::Dense(a) => a.max_abs(),
            Self::Hmd(h) => h.max_abs(),
            Self::Lmf(l) => l.max_abs(),
            Self::Csr(s) => s.max_abs(),
        }
    }

    /// Length of the scratch buffer [`WeightOperator::matvec_into`] needs.
    pub fn scratch_len(&self) -> usize {
        match self {
            Self::Lmf(l) => l.inner_rank(),
            _ => 0,
        }
    }

    pub fn matvec(&self, x: &RealVector) -> Result<RealVector> {
        if x.len() != self.in_dim() {
            return Err(Error::shape(self.in_dim(), x.len()));
        }
        let mut y = vec![0.0; self.out_dim()];
        let mut scratch = vec![0.0; self.scratch_len()];
        self.matvec_into(x.as_slice(), &mut y, &mut scratch);
        Ok(RealVector::from_raw(y))
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64], scratch: &mut [f64]) {
        match self {
            Self::Dense(a) => a.matvec_into(x, y),
            Self::Hmd(h) => h.matvec_into(x, y),
            Self::Lmf(l) => l.matvec_into(x, y, scratch),
            Self::Csr(s) => s.matvec_into(x, y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in OperatorKind::ALL {
            assert_eq!(k.as_str().parse::<OperatorKind>().unwrap(), k);
        }
        assert!("bcd".parse::<OperatorKind>().is_err());
    }

    #[test]
    fn dense_counts() {
        let op = WeightOperator::from(DenseMatrix::zeros(3, 5));
        assert_eq!((op.param_count(), op.mac_count(), op.index_loads()), (15, 15, 0));
        assert_eq!((op.out_dim(), op.in_dim()), (3, 5));
    }
}
