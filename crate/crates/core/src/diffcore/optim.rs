use serde::{Deserialize, Serialize};

use super::params::ParamSet;

/// Update rule applied after gradients have been accumulated.
///
/// SGD uses coupled L2 regularization, an effective gradient of
/// `grad + l2 * value`. Adam applies the same decay outside the moment
/// estimates; coupled into them it would be rescaled to a full `lr`-sized
/// step whenever the data gradient is small.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd {
        lr: f64,
        l2: f64,
    },
    /// Adaptive moments; an extension for desk-scale experiments.
    Adam {
        lr: f64,
        l2: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Optimizer {
    pub fn adam(lr: f64, l2: f64) -> Self {
        Optimizer::Adam {
            lr,
            l2,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr, .. } | Optimizer::Adam { lr, .. } => lr,
        }
    }

    pub fn l2(&self) -> f64 {
        match *self {
            Optimizer::Sgd { l2, .. } | Optimizer::Adam { l2, .. } => l2,
        }
    }

    /// Applies one update to every non-frozen parameter, then zeroes gradients.
    pub fn step(&self, params: &mut ParamSet) {
        match *self {
            Optimizer::Sgd { lr, l2 } => sgd_step(params, lr, l2),
            Optimizer::Adam {
                lr,
                l2,
                beta1,
                beta2,
                eps,
            } => adam_step(params, lr, l2, beta1, beta2, eps),
        }
    }
}

/// `θ ← θ − lr·(∇θ + λ·θ)` for every non-frozen parameter; gradients are
/// zeroed afterwards.
pub fn sgd_step(params: &mut ParamSet, lr: f64, l2: f64) {
    for p in params.iter_mut() {
        if !p.frozen {
            let grads = p.grad.data().to_vec();
            for (v, g) in p.value.data_mut().iter_mut().zip(grads) {
                *v -= lr * (g + l2 * *v);
            }
        }
        p.grad.fill(0.0);
    }
    params.step += 1;
}

fn adam_step(params: &mut ParamSet, lr: f64, l2: f64, beta1: f64, beta2: f64, eps: f64) {
    params.step += 1;
    let t = params.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for p in params.iter_mut() {
        if !p.frozen {
            let n = p.value.len();
            let (m, v) = p
                .moments
                .get_or_insert_with(|| (vec![0.0; n], vec![0.0; n]));
            let values = p.value.data_mut();
            for i in 0..n {
                let g = p.grad.data()[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                values[i] -= lr * (m_hat / (v_hat.sqrt() + eps) + l2 * values[i]);
            }
        }
        p.grad.fill(0.0);
    }
}
