//! Single LSTM cell without peepholes. Gate blocks are stacked in the order
//! input, forget, output, candidate: rows `[0,H)`, `[H,2H)`, `[2H,3H)`, `[3H,4H)`.

use crate::diffcore::ops::sigmoid_scalar;
use crate::diffcore::{gemv_acc, gemv_t_acc, outer_acc};

/// Borrowed weights of one LSTM direction.
#[derive(Debug, Clone, Copy)]
pub struct LstmWeights<'a> {
    /// `4H x input_dim`
    pub w_x: &'a [f64],
    /// `4H x H`
    pub w_h: &'a [f64],
    /// `4H`
    pub b: &'a [f64],
    pub input_dim: usize,
    pub hidden: usize,
}

/// Gradient buffers matching [`LstmWeights`].
pub struct LstmGrads<'a> {
    pub w_x: &'a mut [f64],
    pub w_h: &'a mut [f64],
    pub b: &'a mut [f64],
}

/// Everything one step keeps for its backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    /// Activated gates `[i, f, o, g]`, length 4H.
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// `i,f,o = σ(W x + U h + b)`, `g = tanh(W_c x + U_c h + b_c)`,
/// `c = f⊙c_prev + i⊙g`, `h = o⊙tanh(c)`.
pub fn lstm_cell(x: &[f64], h_prev: &[f64], c_prev: &[f64], w: &LstmWeights<'_>) -> CellState {
    let hd = w.hidden;
    let mut gates = w.b.to_vec();
    gemv_acc(w.w_x, 4 * hd, w.input_dim, x, &mut gates);
    gemv_acc(w.w_h, 4 * hd, hd, h_prev, &mut gates);
    for v in &mut gates[..3 * hd] {
        *v = sigmoid_scalar(*v);
    }
    for v in &mut gates[3 * hd..] {
        *v = v.tanh();
    }
    let mut c = vec![0.0; hd];
    let mut tanh_c = vec![0.0; hd];
    let mut h = vec![0.0; hd];
    for k in 0..hd {
        let (i, f, o, g) = (
            gates[k],
            gates[hd + k],
            gates[2 * hd + k],
            gates[3 * hd + k],
        );
        c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = c[k].tanh();
        h[k] = o * tanh_c[k];
    }
    CellState {
        gates,
        c,
        tanh_c,
        h,
    }
}

/// Backward through one cell. `dh` and `dc` are the total upstream gradients
/// of `h` and `c`. Weight gradients are accumulated into `grads`; `dx` is
/// accumulated into the caller's buffer. Returns `(dh_prev, dc_prev)`.
#[allow(clippy::too_many_arguments)]
pub fn lstm_cell_backward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    state: &CellState,
    w: &LstmWeights<'_>,
    dh: &[f64],
    dc: &[f64],
    grads: &mut LstmGrads<'_>,
    dx: &mut [f64],
) -> (Vec<f64>, Vec<f64>) {
    let hd = w.hidden;
    let g = &state.gates;
    let mut da = vec![0.0; 4 * hd];
    let mut dc_prev = vec![0.0; hd];
    for k in 0..hd {
        let (i, f, o, cand) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
        let tc = state.tanh_c[k];
        let d_o = dh[k] * tc;
        let dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
        let d_i = dct * cand;
        let d_f = dct * c_prev[k];
        let d_g = dct * i;
        dc_prev[k] = dct * f;
        da[k] = d_i * i * (1.0 - i);
        da[hd + k] = d_f * f * (1.0 - f);
        da[2 * hd + k] = d_o * o * (1.0 - o);
        da[3 * hd + k] = d_g * (1.0 - cand * cand);
    }
    outer_acc(grads.w_x, &da, x);
    outer_acc(grads.w_h, &da, h_prev);
    for (b, d) in grads.b.iter_mut().zip(&da) {
        *b += d;
    }
    gemv_t_acc(w.w_x, 4 * hd, w.input_dim, &da, dx);
    let mut dh_prev = vec![0.0; hd];
    gemv_t_acc(w.w_h, 4 * hd, hd, &da, &mut dh_prev);
    (dh_prev, dc_prev)
}

/// One direction over a whole sequence, steps kept in processing order.
#[derive(Debug, Clone)]
pub(crate) struct DirectionTrace {
    pub reverse: bool,
    pub steps: Vec<CellState>,
}

impl DirectionTrace {
    /// Sequence position handled at processing step `s`.
    pub fn position(&self, s: usize) -> usize {
        if self.reverse {
            self.steps.len() - 1 - s
        } else {
            s
        }
    }
}

/// Runs one direction over `input` (`T x input_dim`, row per position).
pub(crate) fn run_direction(input: &[f64], w: &LstmWeights<'_>, reverse: bool) -> DirectionTrace {
    let t_len = input.len() / w.input_dim;
    let zeros = vec![0.0; w.hidden];
    let mut trace = DirectionTrace {
        reverse,
        steps: Vec::with_capacity(t_len),
    };
    for s in 0..t_len {
        let t = if reverse { t_len - 1 - s } else { s };
        let x = &input[t * w.input_dim..(t + 1) * w.input_dim];
        let (h_prev, c_prev) = match trace.steps.last() {
            Some(prev) => (&prev.h[..], &prev.c[..]),
            None => (&zeros[..], &zeros[..]),
        };
        let state = lstm_cell(x, h_prev, c_prev, w);
        trace.steps.push(state);
    }
    trace
}

/// Backpropagation through time for one direction. `d_out(t)` yields the
/// gradient arriving at the hidden output of position `t`; input gradients
/// are accumulated into `dx` (`T x input_dim`).
pub(crate) fn backward_direction(
    input: &[f64],
    trace: &DirectionTrace,
    w: &LstmWeights<'_>,
    d_out: impl Fn(usize) -> Vec<f64>,
    grads: &mut LstmGrads<'_>,
    dx: &mut [f64],
) {
    let hd = w.hidden;
    let zeros = vec![0.0; hd];
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    for s in (0..trace.steps.len()).rev() {
        let t = trace.position(s);
        let mut dh = d_out(t);
        for (a, b) in dh.iter_mut().zip(&dh_next) {
            *a += b;
        }
        let (h_prev, c_prev) = if s > 0 {
            (&trace.steps[s - 1].h[..], &trace.steps[s - 1].c[..])
        } else {
            (&zeros[..], &zeros[..])
        };
        let x = &input[t * w.input_dim..(t + 1) * w.input_dim];
        let dx_t = &mut dx[t * w.input_dim..(t + 1) * w.input_dim];
        let (dhp, dcp) = lstm_cell_backward(
            x,
            h_prev,
            c_prev,
            &trace.steps[s],
            w,
            &dh,
            &dc_next,
            grads,
            dx_t,
        );
        dh_next = dhp;
        dc_next = dcp;
    }
}
