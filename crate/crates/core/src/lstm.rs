//! Single-layer LSTM cell over pluggable weight operators.
//!
//! Gate rows are fused in the order `i, f, g, o`: `w_x` is `4h x input`,
//! `w_h` is `4h x h` and `bias` has `4h` entries.
//!
//! ```text
//! z  = w_x x + w_h h + bias
//! i  = sigmoid(z_i)   f = sigmoid(z_f)   g = tanh(z_g)   o = sigmoid(z_o)
//! c' = f * c + i * g
//! h' = o * tanh(c')
//! ```

use crate::compress::{compress_matrix, Scheme};
use crate::error::{Error, Result};
use crate::linalg::RealVector;
use crate::operator::{OperatorKind, WeightOperator};

/// Gate order of the fused weight rows.
pub const GATE_ORDER: &str = "ifgo";

/// Elementwise operations per hidden unit per step: two adds for the gate
/// pre-activations (4 gates each), five nonlinearities, three for the cell
/// update and one for the output.
pub const ELEMENTWISE_OPS_PER_UNIT: u64 = 8 + 5 + 3 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: RealVector,
    pub c: RealVector,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        LstmState {
            h: RealVector::zeros(hidden_dim),
            c: RealVector::zeros(hidden_dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    input_dim: usize,
    hidden_dim: usize,
    w_x: WeightOperator,
    w_h: WeightOperator,
    bias: RealVector,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmCell {
    pub fn new(w_x: WeightOperator, w_h: WeightOperator, bias: RealVector) -> Result<Self> {
        let hidden_dim = w_h.in_dim();
        let gates = 4 * hidden_dim;
        if w_h.out_dim() != gates {
            return Err(Error::shape(format!("w_h with {gates} rows"), w_h.out_dim()));
        }
        if w_x.out_dim() != gates {
            return Err(Error::shape(format!("w_x with {gates} rows"), w_x.out_dim()));
        }
        if bias.len() != gates {
            return Err(Error::shape(format!("bias of length {gates}"), bias.len()));
        }
        Ok(LstmCell {
            input_dim: w_x.in_dim(),
            hidden_dim,
            w_x,
            w_h,
            bias,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn w_x(&self) -> &WeightOperator {
        &self.w_x
    }

    pub fn w_h(&self) -> &WeightOperator {
        &self.w_h
    }

    pub fn bias(&self) -> &RealVector {
        &self.bias
    }

    pub fn step(&self, x: &RealVector, state: &LstmState) -> Result<LstmState> {
        let mut ws = Workspace::new(self);
        self.step_with(&mut ws, x, state)
    }

    fn check_state(&self, state: &LstmState) -> Result<()> {
        for v in [&state.h, &state.c] {
            if v.len() != self.hidden_dim {
                return Err(Error::shape(format!("state of length {}", self.hidden_dim), v.len()));
            }
        }
        Ok(())
    }

    fn step_with(&self, ws: &mut Workspace, x: &RealVector, state: &LstmState) -> Result<LstmState> {
        if x.len() != self.input_dim {
            return Err(Error::shape(self.input_dim, x.len()));
        }
        self.check_state(state)?;
        let hd = self.hidden_dim;
        self.w_x.matvec_into(x.as_slice(), &mut ws.zx, &mut ws.scratch_x);
        self.w_h.matvec_into(state.h.as_slice(), &mut ws.zh, &mut ws.scratch_h);
        let b = self.bias.as_slice();
        let z: Vec<f64> = (0..4 * hd).map(|k| ws.zx[k] + ws.zh[k] + b[k]).collect();

        let c_prev = state.c.as_slice();
        let mut h = Vec::with_capacity(hd);
        let mut c = Vec::with_capacity(hd);
        for j in 0..hd {
            let i_gate = sigmoid(z[j]);
            let f_gate = sigmoid(z[hd + j]);
            let g_gate = z[2 * hd + j].tanh();
            let o_gate = sigmoid(z[3 * hd + j]);
            let cj = f_gate * c_prev[j] + i_gate * g_gate;
            c.push(cj);
            h.push(o_gate * cj.tanh());
        }
        Ok(LstmState {
            h: RealVector::from_raw(h),
            c: RealVector::from_raw(c),
        })
    }

    /// Runs the cell over `sequence`, returning the state after every step.
    pub fn forward(&self, sequence: &[RealVector], init: &LstmState) -> Result<Vec<LstmState>> {
        self.check_state(init)?;
        let mut ws = Workspace::new(self);
        let mut out: Vec<LstmState> = Vec::with_capacity(sequence.len());
        for x in sequence {
            let prev = out.last().unwrap_or(init);
            let next = self.step_with(&mut ws, x, prev)?;
            out.push(next);
        }
        Ok(out)
    }

    /// Weight-only parameters of both operators.
    pub fn weight_param_count(&self) -> u64 {
        self.w_x.param_count() + self.w_h.param_count()
    }

    /// Weights plus biases.
    pub fn param_count(&self) -> u64 {
        self.weight_param_count() + self.bias.len() as u64
    }

    /// Matvec MACs over `seq_len` steps; elementwise work is reported by
    /// [`LstmCell::elementwise_op_count`].
    pub fn mac_count(&self, seq_len: usize) -> u64 {
        seq_len as u64 * (self.w_x.mac_count() + self.w_h.mac_count())
    }

    pub fn elementwise_op_count(&self, seq_len: usize) -> u64 {
        seq_len as u64 * self.hidden_dim as u64 * ELEMENTWISE_OPS_PER_UNIT
    }

    /// Same cell with every operator expanded to a dense matrix.
    pub fn densified(&self) -> LstmCell {
        LstmCell {
            w_x: WeightOperator::Dense(self.w_x.to_dense()),
            w_h: WeightOperator::Dense(self.w_h.to_dense()),
            ..self.clone()
        }
    }

    /// Compresses both fused weight matrices independently; biases are kept.
    pub fn compress(&self, scheme: Scheme, target: f64) -> Result<LstmCell> {
        let fit = |op: &WeightOperator| match op {
            WeightOperator::Dense(a) => compress_matrix(a, scheme, target),
            other => Err(Error::param(format!(
                "only dense operators can be compressed, found {}",
                other.kind()
            ))),
        };
        let w_x = fit(&self.w_x)?;
        let w_h = fit(&self.w_h)?;
        LstmCell::new(w_x, w_h, self.bias.clone())
    }

    /// Kind of the two operators if they agree.
    pub fn operator_kind(&self) -> Option<OperatorKind> {
        (self.w_x.kind() == self.w_h.kind()).then(|| self.w_x.kind())
    }
}

struct Workspace {
    zx: Vec<f64>,
    zh: Vec<f64>,
    scratch_x: Vec<f64>,
    scratch_h: Vec<f64>,
}

impl Workspace {
    fn new(cell: &LstmCell) -> Self {
        let gates = 4 * cell.hidden_dim;
        Workspace {
            zx: vec![0.0; gates],
            zh: vec![0.0; gates],
            scratch_x: vec![0.0; cell.w_x.scratch_len()],
            scratch_h: vec![0.0; cell.w_h.scratch_len()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_matrix, DenseMatrix};

    fn zero_cell(input: usize, hidden: usize, bias: Vec<f64>) -> LstmCell {
        LstmCell::new(
            DenseMatrix::zeros(4 * hidden, input).into(),
            DenseMatrix::zeros(4 * hidden, hidden).into(),
            RealVector::new(bias).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_half_open_gates() {
        let cell = zero_cell(3, 2, vec![0.0; 8]);
        let state = LstmState {
            h: RealVector::new(vec![0.3, -0.2]).unwrap(),
            c: RealVector::new(vec![1.5, -4.0]).unwrap(),
        };
        let x = RealVector::new(vec![7.0, -1.0, 2.0]).unwrap();
        let next = cell.step(&x, &state).unwrap();
        for (j, &c) in [1.5, -4.0].iter().enumerate() {
            assert_eq!(next.c.as_slice()[j], 0.5 * c);
            assert_eq!(next.h.as_slice()[j], 0.5 * (0.5 * c).tanh());
        }
    }

    #[test]
    fn saturated_forget_gate_carries_memory() {
        let hidden = 3;
        let mut bias = vec![0.0; 4 * hidden];
        bias[hidden..2 * hidden].iter_mut().for_each(|b| *b = 50.0);
        let cell = zero_cell(2, hidden, bias);
        let state = LstmState {
            h: RealVector::zeros(hidden),
            c: RealVector::new(vec![0.7, -2.0, 10.0]).unwrap(),
        };
        let next = cell.step(&RealVector::zeros(2), &state).unwrap();
        for (a, b) in next.c.as_slice().iter().zip(state.c.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_edge_cases() {
        let cell = LstmCell::new(
            random_matrix(8, 3, 0.5, 1).into(),
            random_matrix(8, 2, 0.5, 2).into(),
            RealVector::new(vec![0.1; 8]).unwrap(),
        )
        .unwrap();
        let init = LstmState::zeros(2);
        assert!(cell.forward(&[], &init).unwrap().is_empty());
        let x = RealVector::new(vec![1.0, -1.0, 0.5]).unwrap();
        let one = cell.forward(std::slice::from_ref(&x), &init).unwrap();
        assert_eq!(one, vec![cell.step(&x, &init).unwrap()]);
        assert!(cell.forward(&[RealVector::zeros(2)], &init).is_err());
        assert!(cell.step(&x, &LstmState::zeros(3)).is_err());
    }

    #[test]
    fn shape_checks() {
        let bad = LstmCell::new(
            DenseMatrix::zeros(8, 3).into(),
            DenseMatrix::zeros(8, 3).into(),
            RealVector::zeros(8),
        );
        assert!(bad.is_err());
        let bad_bias = LstmCell::new(
            DenseMatrix::zeros(8, 3).into(),
            DenseMatrix::zeros(8, 2).into(),
            RealVector::zeros(7),
        );
        assert!(bad_bias.is_err());
    }

    #[test]
    fn dense_counts() {
        let cell = zero_cell(200, 200, vec![0.0; 800]);
        assert_eq!(cell.weight_param_count(), 320_000);
        assert_eq!(cell.param_count(), 320_800);
        assert_eq!(cell.mac_count(0), 0);
        assert_eq!(cell.mac_count(3), 3 * 320_000);
    }

    #[test]
    fn compress_rejects_compressed_input() {
        let cell = LstmCell::new(
            random_matrix(8, 4, 0.5, 1).into(),
            random_matrix(8, 2, 0.5, 2).into(),
            RealVector::zeros(8),
        )
        .unwrap();
        let c = cell.compress(Scheme::Csr, 2.0).unwrap();
        assert!(c.compress(Scheme::Csr, 2.0).is_err());
    }
}
