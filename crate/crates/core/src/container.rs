//! `HMDC1` weight container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! 0   5   magic "HMDC1"
//! 5   3   zero padding
//! 8   8   u64 manifest length in bytes
//! 16  L   manifest, UTF-8 JSON
//!     ..  zero padding to the next multiple of 8
//!     P   payload: the arrays listed in the manifest, in manifest order;
//!         each starts on an 8-byte boundary and is zero padded after
//! ```
//!
//! Float arrays are IEEE-754 binary64. Index arrays (CSR column indices and
//! row pointers) are `u32`, declared by `index_width = 32`. `payload_bytes`
//! in the manifest must equal `P` exactly.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error as CoreError;
use crate::hmd::HmdMatrix;
use crate::linalg::{DenseMatrix, RealVector};
use crate::lowrank::LmfMatrix;
use crate::lstm::{LstmCell, GATE_ORDER};
use crate::operator::{OperatorKind, WeightOperator};
use crate::sparse::CsrMatrix;

pub const MAGIC: &[u8; 5] = b"HMDC1";
pub const FORMAT_VERSION: u32 = 1;
pub const INDEX_WIDTH: u32 = 32;
const HEADER_LEN: usize = 16;
const CELL_KIND: &str = "lstm_cell";

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic: not an HMDC1 container")]
    BadMagic,

    #[error("truncated container: {0}")]
    Truncated(&'static str),

    #[error("payload length mismatch: manifest declares {declared} bytes, file holds {actual}")]
    LengthMismatch { declared: u64, actual: u64 },

    #[error("unknown kind '{0}'")]
    UnknownKind(String),

    #[error("malformed manifest: {0}")]
    Manifest(String),

    #[error("invalid contents: {0}")]
    Invalid(#[from] CoreError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything a container can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Container {
    Operator(WeightOperator),
    Cell(LstmCell),
}

impl From<WeightOperator> for Container {
    fn from(op: WeightOperator) -> Self {
        Container::Operator(op)
    }
}

impl From<LstmCell> for Container {
    fn from(cell: LstmCell) -> Self {
        Container::Cell(cell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Dtype {
    F64,
    U32,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::U32 => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    dtype: Dtype,
    len: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OperatorEntry {
    role: String,
    kind: String,
    rows: u64,
    cols: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rank: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nnz: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    kind: String,
    byte_order: String,
    float: String,
    index_width: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gate_order: Option<String>,
    operators: Vec<OperatorEntry>,
    arrays: Vec<ArrayEntry>,
    payload_bytes: u64,
}

fn align8(n: usize) -> usize {
    n.div_ceil(8) * 8
}

enum Array<'a> {
    F64(&'a [f64]),
    U32(&'a [u32]),
}

struct Writer<'a> {
    operators: Vec<OperatorEntry>,
    arrays: Vec<(String, Array<'a>)>,
}

impl<'a> Writer<'a> {
    fn push_operator(&mut self, role: &str, op: &'a WeightOperator) {
        let mut entry = OperatorEntry {
            role: role.to_string(),
            kind: op.kind().as_str().to_string(),
            rows: op.out_dim() as u64,
            cols: op.in_dim() as u64,
            rank: None,
            nnz: None,
        };
        let name = |s: &str| format!("{role}.{s}");
        match op {
            WeightOperator::Dense(a) => {
                self.arrays.push((name("data"), Array::F64(a.data())));
            }
            WeightOperator::Hmd(h) => {
                entry.rank = Some(h.dense_rows() as u64);
                for (label, arr) in ["a_prime", "b", "c", "d", "e"].into_iter().zip(h.arrays()) {
                    self.arrays.push((name(label), Array::F64(arr)));
                }
            }
            WeightOperator::Lmf(l) => {
                entry.rank = Some(l.inner_rank() as u64);
                self.arrays.push((name("u"), Array::F64(l.u().data())));
                self.arrays.push((name("v"), Array::F64(l.v().data())));
            }
            WeightOperator::Csr(s) => {
                entry.nnz = Some(s.nnz() as u64);
                self.arrays.push((name("values"), Array::F64(s.values())));
                self.arrays.push((name("col_idx"), Array::U32(s.col_idx())));
                self.arrays.push((name("row_ptr"), Array::U32(s.row_ptr())));
            }
        }
        self.operators.push(entry);
    }
}

/// Serializes `item` into container bytes.
pub fn to_bytes(item: &Container) -> Vec<u8> {
    let mut w = Writer {
        operators: Vec::new(),
        arrays: Vec::new(),
    };
    let (kind, gate_order) = match item {
        Container::Operator(op) => {
            w.push_operator("w", op);
            (op.kind().as_str().to_string(), None)
        }
        Container::Cell(cell) => {
            w.push_operator("w_x", cell.w_x());
            w.push_operator("w_h", cell.w_h());
            w.arrays.push(("bias".to_string(), Array::F64(cell.bias().as_slice())));
            (CELL_KIND.to_string(), Some(GATE_ORDER.to_string()))
        }
    };

    let entries: Vec<ArrayEntry> = w
        .arrays
        .iter()
        .map(|(name, arr)| {
            let (dtype, len) = match arr {
                Array::F64(a) => (Dtype::F64, a.len()),
                Array::U32(a) => (Dtype::U32, a.len()),
            };
            ArrayEntry {
                name: name.clone(),
                dtype,
                len: len as u64,
            }
        })
        .collect();
    let payload_bytes = entries
        .iter()
        .map(|e| align8(e.len as usize * e.dtype.width()))
        .sum::<usize>() as u64;

    let manifest = Manifest {
        version: FORMAT_VERSION,
        kind,
        byte_order: "little".to_string(),
        float: "f64".to_string(),
        index_width: INDEX_WIDTH,
        gate_order,
        operators: w.operators,
        arrays: entries,
        payload_bytes,
    };
    let manifest = serde_json::to_vec(&manifest).expect("manifest serializes");

    let mut out = Vec::with_capacity(HEADER_LEN + align8(manifest.len()) + payload_bytes as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[0; 3]);
    out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
    out.extend_from_slice(&manifest);
    out.resize(align8(out.len()), 0);
    for (_, arr) in &w.arrays {
        match arr {
            Array::F64(a) => a.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
            Array::U32(a) => a.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        }
        out.resize(align8(out.len()), 0);
    }
    out
}

/// Parses container bytes.
pub fn from_bytes(bytes: &[u8]) -> Result<Container, ContainerError> {
    if bytes.len() < MAGIC.len() {
        return Err(if MAGIC.starts_with(bytes) && !bytes.is_empty() {
            ContainerError::Truncated("header")
        } else {
            ContainerError::BadMagic
        });
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(ContainerError::Truncated("header"));
    }
    let manifest_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let manifest_end = usize::try_from(manifest_len)
        .ok()
        .and_then(|l| l.checked_add(HEADER_LEN))
        .filter(|&end| end <= bytes.len())
        .ok_or(ContainerError::Truncated("manifest"))?;
    let raw = &bytes[HEADER_LEN..manifest_end];

    let value: serde_json::Value =
        serde_json::from_slice(raw).map_err(|e| ContainerError::Manifest(e.to_string()))?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .map(str::to_string)
        .ok_or_else(|| ContainerError::Manifest("missing kind".to_string()))?;
    if kind != CELL_KIND && kind.parse::<OperatorKind>().is_err() {
        return Err(ContainerError::UnknownKind(kind));
    }
    let manifest: Manifest =
        serde_json::from_value(value).map_err(|e| ContainerError::Manifest(e.to_string()))?;
    for op in &manifest.operators {
        if op.kind.parse::<OperatorKind>().is_err() {
            return Err(ContainerError::UnknownKind(op.kind.clone()));
        }
    }
    if manifest.version != FORMAT_VERSION {
        return Err(ContainerError::Manifest(format!("unsupported version {}", manifest.version)));
    }
    if manifest.byte_order != "little" || manifest.float != "f64" || manifest.index_width != INDEX_WIDTH {
        return Err(ContainerError::Manifest(
            "only little-endian f64 payloads with 32-bit indices are supported".to_string(),
        ));
    }

    let payload_start = align8(manifest_end);
    let actual = bytes.len().saturating_sub(payload_start) as u64;
    if actual != manifest.payload_bytes {
        return Err(ContainerError::LengthMismatch {
            declared: manifest.payload_bytes,
            actual,
        });
    }
    let mut expected = 0u64;
    for e in &manifest.arrays {
        let size = e
            .len
            .checked_mul(e.dtype.width() as u64)
            .and_then(|b| usize::try_from(b).ok())
            .ok_or_else(|| ContainerError::Manifest(format!("array '{}' too large", e.name)))?;
        expected = expected.saturating_add(align8(size) as u64);
    }
    if expected != manifest.payload_bytes {
        return Err(ContainerError::Manifest(format!(
            "arrays occupy {expected} bytes but payload_bytes is {}",
            manifest.payload_bytes
        )));
    }

    let mut arrays = ArrayTable::default();
    let mut offset = payload_start;
    for e in &manifest.arrays {
        let len = e.len as usize;
        let chunk = &bytes[offset..offset + len * e.dtype.width()];
        let decoded = match e.dtype {
            Dtype::F64 => Decoded::F64(
                chunk
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect(),
            ),
            Dtype::U32 => Decoded::U32(
                chunk
                    .chunks_exact(4)
                    .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect(),
            ),
        };
        if arrays.0.insert(e.name.clone(), decoded).is_some() {
            return Err(ContainerError::Manifest(format!("duplicate array '{}'", e.name)));
        }
        offset += align8(len * e.dtype.width());
    }

    let find = |role: &str| {
        manifest
            .operators
            .iter()
            .find(|o| o.role == role)
            .ok_or_else(|| ContainerError::Manifest(format!("missing operator '{role}'")))
    };
    if kind == CELL_KIND {
        if manifest.gate_order.as_deref() != Some(GATE_ORDER) {
            return Err(ContainerError::Manifest(format!(
                "gate order must be '{GATE_ORDER}', found {:?}",
                manifest.gate_order
            )));
        }
        let w_x = read_operator(find("w_x")?, &mut arrays)?;
        let w_h = read_operator(find("w_h")?, &mut arrays)?;
        let bias = RealVector::new(arrays.f64("bias")?)?;
        arrays.finish()?;
        Ok(Container::Cell(LstmCell::new(w_x, w_h, bias)?))
    } else {
        let entry = find("w")?;
        if entry.kind != kind {
            return Err(ContainerError::Manifest(format!(
                "container kind '{kind}' but operator kind '{}'",
                entry.kind
            )));
        }
        let op = read_operator(entry, &mut arrays)?;
        arrays.finish()?;
        Ok(Container::Operator(op))
    }
}

enum Decoded {
    F64(Vec<f64>),
    U32(Vec<u32>),
}

#[derive(Default)]
struct ArrayTable(HashMap<String, Decoded>);

impl ArrayTable {
    fn f64(&mut self, name: &str) -> Result<Vec<f64>, ContainerError> {
        match self.0.remove(name) {
            Some(Decoded::F64(v)) => Ok(v),
            Some(Decoded::U32(_)) => Err(ContainerError::Manifest(format!("array '{name}' must be f64"))),
            None => Err(ContainerError::Manifest(format!("missing array '{name}'"))),
        }
    }

    fn u32(&mut self, name: &str) -> Result<Vec<u32>, ContainerError> {
        match self.0.remove(name) {
            Some(Decoded::U32(v)) => Ok(v),
            Some(Decoded::F64(_)) => Err(ContainerError::Manifest(format!("array '{name}' must be u32"))),
            None => Err(ContainerError::Manifest(format!("missing array '{name}'"))),
        }
    }

    fn finish(self) -> Result<(), ContainerError> {
        match self.0.keys().next() {
            Some(extra) => Err(ContainerError::Manifest(format!("unexpected array '{extra}'"))),
            None => Ok(()),
        }
    }
}

fn read_operator(entry: &OperatorEntry, arrays: &mut ArrayTable) -> Result<WeightOperator, ContainerError> {
    let kind: OperatorKind = entry
        .kind
        .parse()
        .map_err(|_| ContainerError::UnknownKind(entry.kind.clone()))?;
    let (m, n) = (entry.rows as usize, entry.cols as usize);
    let name = |s: &str| format!("{}.{s}", entry.role);
    let need = |v: Option<u64>, what: &str| {
        v.map(|x| x as usize)
            .ok_or_else(|| ContainerError::Manifest(format!("{} operator needs '{what}'", entry.kind)))
    };
    let op = match kind {
        OperatorKind::Dense => DenseMatrix::new(m, n, arrays.f64(&name("data"))?)?.into(),
        OperatorKind::Hmd => {
            let r = need(entry.rank, "rank")?;
            HmdMatrix::new(
                m,
                n,
                r,
                arrays.f64(&name("a_prime"))?,
                arrays.f64(&name("b"))?,
                arrays.f64(&name("c"))?,
                arrays.f64(&name("d"))?,
                arrays.f64(&name("e"))?,
            )?
            .into()
        }
        OperatorKind::Lmf => {
            let d = need(entry.rank, "rank")?;
            let u = DenseMatrix::new(m, d, arrays.f64(&name("u"))?)?;
            let v = DenseMatrix::new(d, n, arrays.f64(&name("v"))?)?;
            LmfMatrix::new(u, v)?.into()
        }
        OperatorKind::Csr => {
            let nnz = need(entry.nnz, "nnz")?;
            let s = CsrMatrix::new(
                m,
                n,
                arrays.f64(&name("values"))?,
                arrays.u32(&name("col_idx"))?,
                arrays.u32(&name("row_ptr"))?,
            )?;
            if s.nnz() != nnz {
                return Err(ContainerError::Manifest(format!(
                    "manifest declares nnz {nnz}, arrays hold {}",
                    s.nnz()
                )));
            }
            s.into()
        }
    };
    Ok(op)
}

pub fn save_container(path: impl AsRef<Path>, item: &Container) -> Result<(), ContainerError> {
    fs::write(path, to_bytes(item))?;
    Ok(())
}

pub fn load_container(path: impl AsRef<Path>) -> Result<Container, ContainerError> {
    from_bytes(&fs::read(path)?)
}
