//! Differentiable primitives.
//!
//! Every forward function has a matching `*_backward` that maps the upstream
//! gradient of the output to gradients of the inputs. Backward functions take
//! whatever forward values they need (inputs or outputs) explicitly, so there
//! is no tape: callers keep the values they computed.

use super::tensor::{dot, Tensor};
use crate::{Error, Result};

fn check_same(a: &Tensor, b: &Tensor, op: &str) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{op}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )))
    }
}

/// Matrix product of two rank-2 tensors.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape().len() != 2 || b.shape().len() != 2 || a.cols() != b.rows() {
        return Err(Error::Shape(format!(
            "matmul: {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let aip = a.data()[i * k + p];
            if aip != 0.0 {
                super::tensor::axpy(aip, &b.data()[p * m..(p + 1) * m], row);
            }
        }
    }
    Tensor::matrix(n, m, out)
}

/// Returns `(dA, dB) = (G B^T, A^T G)`.
pub fn matmul_backward(a: &Tensor, b: &Tensor, grad: &Tensor) -> Result<(Tensor, Tensor)> {
    if grad.shape() != [a.rows(), b.cols()] {
        return Err(Error::Shape(format!(
            "matmul_backward: grad {:?} for {:?} x {:?}",
            grad.shape(),
            a.shape(),
            b.shape()
        )));
    }
    let da = matmul(grad, &b.transpose())?;
    let db = matmul(&a.transpose(), grad)?;
    Ok((da, db))
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_same(a, b, "add")?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    Tensor::new(a.shape(), data)
}

pub fn add_backward(grad: &Tensor) -> (Tensor, Tensor) {
    (grad.clone(), grad.clone())
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(sigmoid_scalar)
}

/// Gradient of sigmoid given its output `y`.
pub fn sigmoid_backward(y: &Tensor, grad: &Tensor) -> Result<Tensor> {
    check_same(y, grad, "sigmoid_backward")?;
    let data = y
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&y, &g)| g * y * (1.0 - y))
        .collect();
    Tensor::new(y.shape(), data)
}

pub fn tanh(x: &Tensor) -> Tensor {
    x.map(f64::tanh)
}

/// Gradient of tanh given its output `y`.
pub fn tanh_backward(y: &Tensor, grad: &Tensor) -> Result<Tensor> {
    check_same(y, grad, "tanh_backward")?;
    let data = y
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&y, &g)| g * (1.0 - y * y))
        .collect();
    Tensor::new(y.shape(), data)
}

pub fn hadamard(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_same(a, b, "hadamard")?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    Tensor::new(a.shape(), data)
}

pub fn hadamard_backward(a: &Tensor, b: &Tensor, grad: &Tensor) -> Result<(Tensor, Tensor)> {
    check_same(a, b, "hadamard_backward")?;
    check_same(a, grad, "hadamard_backward")?;
    Ok((hadamard(grad, b)?, hadamard(grad, a)?))
}

/// Concatenation of two vectors.
pub fn concat(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape().len() != 1 || b.shape().len() != 1 {
        return Err(Error::Shape(format!(
            "concat expects vectors, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut data = a.data().to_vec();
    data.extend_from_slice(b.data());
    Tensor::vector(data)
}

/// Splits the gradient of a concatenation back at `split`.
pub fn concat_backward(grad: &Tensor, split: usize) -> Result<(Tensor, Tensor)> {
    if grad.shape().len() != 1 || split > grad.len() {
        return Err(Error::Shape(format!(
            "concat_backward: split {split} of {:?}",
            grad.shape()
        )));
    }
    let (a, b) = grad.data().split_at(split);
    Ok((Tensor::vector(a.to_vec())?, Tensor::vector(b.to_vec())?))
}

/// Per-dimension maximum over time. Returns the pooled vector and, for each
/// dimension, the time step that produced it (earliest on ties).
pub fn temporal_max_pool<S: AsRef<[f64]>>(series: &[S]) -> Result<(Vec<f64>, Vec<usize>)> {
    let first = series
        .first()
        .ok_or_else(|| Error::Empty("temporal_max_pool over an empty series".into()))?
        .as_ref();
    let dim = first.len();
    let mut out = first.to_vec();
    let mut argmax = vec![0; dim];
    for (t, step) in series.iter().enumerate().skip(1) {
        let step = step.as_ref();
        if step.len() != dim {
            return Err(Error::Shape(format!(
                "temporal_max_pool: step {t} has dim {}, expected {dim}",
                step.len()
            )));
        }
        for d in 0..dim {
            if step[d] > out[d] {
                out[d] = step[d];
                argmax[d] = t;
            }
        }
    }
    Ok((out, argmax))
}

/// Routes `grad[d]` to time step `argmax[d]`; all other steps get zero.
pub fn temporal_max_pool_backward(argmax: &[usize], grad: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; grad.len()]; steps];
    for (d, (&t, &g)) in argmax.iter().zip(grad).enumerate() {
        out[t][d] += g;
    }
    out
}

/// Numerically stable softmax (max subtracted before exponentiation).
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Vector-Jacobian product of softmax given its output `y`:
/// `dx = y * (g - <g, y>)`.
pub fn softmax_backward(y: &[f64], grad: &[f64]) -> Vec<f64> {
    let inner = dot(y, grad);
    y.iter()
        .zip(grad)
        .map(|(&yi, &gi)| yi * (gi - inner))
        .collect()
}

/// Cosine similarity. Errors on a zero-norm input. The result is clamped
/// to [-1, 1], which rounding can otherwise overshoot for parallel inputs.
pub fn cosine(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!(
            "cosine: lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    let np = dot(p, p).sqrt();
    let nq = dot(q, q).sqrt();
    if np == 0.0 || nq == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(p, q) / (np * nq)).clamp(-1.0, 1.0))
}

/// Gradients of `grad * cosine(p, q)` with respect to `p` and `q`.
pub fn cosine_backward(p: &[f64], q: &[f64], grad: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = cosine(p, q)?;
    let np = dot(p, p).sqrt();
    let nq = dot(q, q).sqrt();
    let inv = 1.0 / (np * nq);
    let dp = p
        .iter()
        .zip(q)
        .map(|(&pi, &qi)| grad * (qi * inv - s * pi / (np * np)))
        .collect();
    let dq = p
        .iter()
        .zip(q)
        .map(|(&pi, &qi)| grad * (pi * inv - s * qi / (nq * nq)))
        .collect();
    Ok((dp, dq))
}

/// Squared error between a similarity and a binary pseudo label.
pub fn se_cost(similarity: f64, label: u8) -> f64 {
    let d = similarity - f64::from(label);
    d * d
}

pub fn se_cost_backward(similarity: f64, label: u8) -> f64 {
    2.0 * (similarity - f64::from(label))
}
