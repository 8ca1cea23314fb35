//! Siamese sequence encoder.
//!
//! One branch maps a token sequence through embedding lookup, stacked
//! bidirectional LSTM layers, per-dimension max pooling over time, a linear
//! projection and a softmax to a [`CategoryDistribution`]. Both sides of a
//! pair run through the same branch and parameters; their cosine similarity
//! is regressed onto the pair's pseudo label with a squared error.

mod check;
mod lstm;

pub use check::{whole_model_gradcheck, CaseResult, GradCheckSpec, WholeModelReport};
pub use lstm::{lstm_cell, lstm_cell_backward, CellState, LstmGrads, LstmWeights};

use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EmbeddingTable, TokenId};
use crate::diffcore::ops::{
    cosine, cosine_backward, se_cost, se_cost_backward, softmax, softmax_backward,
    temporal_max_pool,
};
use crate::diffcore::{gemv_acc, gemv_t_acc, outer_acc, ParamSet, Tensor};
use crate::pairing::PairInstance;
use crate::{seeded_rng, Error, Result};
use lstm::{backward_direction, run_direction, DirectionTrace};

fn default_embedding_dim() -> usize {
    300
}
fn default_hidden() -> usize {
    256
}
fn default_layers() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_init_scale() -> f64 {
    0.1
}
fn default_forget_bias() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    /// Hidden units per direction.
    #[serde(default = "default_hidden")]
    pub hidden_size: usize,
    /// Stacked bidirectional layers.
    #[serde(default = "default_layers")]
    pub num_layers: usize,
    /// Softmax dimension, i.e. the number of clusters.
    pub num_categories: usize,
    #[serde(default = "default_true")]
    pub freeze_embeddings: bool,
    pub init_seed: u64,
    /// Weights start uniform in `(-init_scale, init_scale)`.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default = "default_forget_bias")]
    pub forget_bias: f64,
}

impl EncoderConfig {
    pub fn new(vocab_size: usize, num_categories: usize) -> Self {
        EncoderConfig {
            vocab_size,
            embedding_dim: default_embedding_dim(),
            hidden_size: default_hidden(),
            num_layers: default_layers(),
            num_categories,
            freeze_embeddings: true,
            init_seed: 0,
            init_scale: default_init_scale(),
            forget_bias: default_forget_bias(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("embedding_dim", self.embedding_dim),
            ("hidden_size", self.hidden_size),
            ("num_layers", self.num_layers),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if self.num_categories < 2 {
            return Err(Error::Config("num_categories must be at least 2".into()));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::Config("init_scale must be finite and >= 0".into()));
        }
        Ok(())
    }

    fn layer_input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embedding_dim
        } else {
            2 * self.hidden_size
        }
    }
}

/// Probability vector over categories (non-negative, sums to one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryDistribution(Vec<f64>);

impl CategoryDistribution {
    /// Wraps a vector that is already a distribution (checked to 1e-9).
    pub fn new(p: Vec<f64>) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if p.is_empty() || p.iter().any(|v| !(*v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Shape(format!("not a probability vector: {p:?}")));
        }
        Ok(CategoryDistribution(p))
    }

    /// Index of the largest probability, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Unweighted mean of equally sized distributions.
    pub fn mean(items: &[CategoryDistribution]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::Empty("mean of no distributions".into()))?;
        let mut acc = vec![0.0; first.len()];
        for d in items {
            if d.len() != acc.len() {
                return Err(Error::Shape("distributions differ in length".into()));
            }
            for (a, v) in acc.iter_mut().zip(d.iter()) {
                *a += v;
            }
        }
        let n = items.len() as f64;
        Ok(CategoryDistribution(
            acc.into_iter().map(|v| v / n).collect(),
        ))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for CategoryDistribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DirectionParams {
    w_x: usize,
    w_h: usize,
    b: usize,
}

/// Parameter indices of every tensor in the branch.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    embedding: usize,
    lstm: Vec<[DirectionParams; 2]>,
    out_w: usize,
    out_b: usize,
}

struct LayerTrace {
    input: Vec<f64>,
    dirs: [DirectionTrace; 2],
    /// `T x 2H`; each row is `[forward; backward]`.
    output: Vec<f64>,
}

/// Cached forward pass of one sequence.
pub struct SequenceTrace {
    tokens: Vec<usize>,
    layers: Vec<LayerTrace>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
    probs: Vec<f64>,
}

impl SequenceTrace {
    pub fn distribution(&self) -> &[f64] {
        &self.probs
    }

    /// Max-pooled top-layer representation.
    pub fn pooled(&self) -> &[f64] {
        &self.pooled
    }

    /// Smallest gap between the winning and runner-up time step over all
    /// pooled dimensions; infinite for single-step sequences.
    pub fn pool_margin(&self) -> f64 {
        let top = &self.layers.last().expect("at least one layer").output;
        let width = self.pooled.len();
        let steps = top.len() / width;
        let mut margin = f64::INFINITY;
        for d in 0..width {
            for t in 0..steps {
                if t != self.argmax[d] {
                    margin = margin.min(self.pooled[d] - top[t * width + d]);
                }
            }
        }
        margin
    }
}

/// Forward and backward pass of one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutput {
    pub p_a: CategoryDistribution,
    pub p_b: CategoryDistribution,
    pub similarity: f64,
    pub loss: f64,
}

/// The shared branch topology. Every computation takes the parameters
/// explicitly so the same branch can be evaluated on perturbed copies.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    config: EncoderConfig,
    layout: Layout,
}

impl Branch {
    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    fn direction<'a>(&self, params: &'a ParamSet, layer: usize, dir: usize) -> LstmWeights<'a> {
        let idx = self.layout.lstm[layer][dir];
        LstmWeights {
            w_x: params.param(idx.w_x).value.data(),
            w_h: params.param(idx.w_h).value.data(),
            b: params.param(idx.b).value.data(),
            input_dim: self.config.layer_input_dim(layer),
            hidden: self.config.hidden_size,
        }
    }

    pub fn forward(&self, params: &ParamSet, tokens: &[TokenId]) -> Result<SequenceTrace> {
        if tokens.is_empty() {
            return Err(Error::Empty("cannot encode an empty sequence".into()));
        }
        let vocab_size = self.config.vocab_size;
        let tokens: Vec<usize> = tokens
            .iter()
            .map(|&t| {
                let t = t as usize;
                if t < vocab_size {
                    Ok(t)
                } else {
                    Err(Error::TokenOutOfRange { id: t, vocab_size })
                }
            })
            .collect::<Result<_>>()?;

        let e = self.config.embedding_dim;
        let hd = self.config.hidden_size;
        let t_len = tokens.len();
        let table = params.param(self.layout.embedding).value.data();
        let mut input = Vec::with_capacity(t_len * e);
        for &t in &tokens {
            input.extend_from_slice(&table[t * e..(t + 1) * e]);
        }

        let mut layers = Vec::with_capacity(self.config.num_layers);
        for layer in 0..self.config.num_layers {
            let fwd = run_direction(&input, &self.direction(params, layer, 0), false);
            let bwd = run_direction(&input, &self.direction(params, layer, 1), true);
            let mut output = vec![0.0; t_len * 2 * hd];
            for s in 0..t_len {
                let t = fwd.position(s);
                output[t * 2 * hd..t * 2 * hd + hd].copy_from_slice(&fwd.steps[s].h);
                let t = bwd.position(s);
                output[t * 2 * hd + hd..(t + 1) * 2 * hd].copy_from_slice(&bwd.steps[s].h);
            }
            let next = output.clone();
            layers.push(LayerTrace {
                input: std::mem::replace(&mut input, next),
                dirs: [fwd, bwd],
                output,
            });
        }

        let top = &layers.last().expect("num_layers >= 1").output;
        let rows: Vec<&[f64]> = top.chunks_exact(2 * hd).collect();
        let (pooled, argmax) = temporal_max_pool(&rows)?;

        let k = self.config.num_categories;
        let mut logits = params.param(self.layout.out_b).value.data().to_vec();
        gemv_t_acc(
            params.param(self.layout.out_w).value.data(),
            2 * hd,
            k,
            &pooled,
            &mut logits,
        );
        let probs = softmax(&logits);
        Ok(SequenceTrace {
            tokens,
            layers,
            pooled,
            argmax,
            probs,
        })
    }

    /// Accumulates `∂/∂θ <d_probs, p>` into the gradient buffers.
    pub fn backward(&self, params: &mut ParamSet, trace: &SequenceTrace, d_probs: &[f64]) {
        let hd = self.config.hidden_size;
        let k = self.config.num_categories;
        let d_logits = softmax_backward(&trace.probs, d_probs);

        let mut d_pooled = vec![0.0; 2 * hd];
        {
            let [w, b] = params.disjoint_mut([self.layout.out_w, self.layout.out_b]);
            outer_acc(w.grad.data_mut(), &trace.pooled, &d_logits);
            gemv_acc(w.value.data(), 2 * hd, k, &d_logits, &mut d_pooled);
            for (g, d) in b.grad.data_mut().iter_mut().zip(&d_logits) {
                *g += d;
            }
        }

        let t_len = trace.tokens.len();
        let mut d_out = vec![0.0; t_len * 2 * hd];
        for (dim, (&t, &g)) in trace.argmax.iter().zip(&d_pooled).enumerate() {
            d_out[t * 2 * hd + dim] += g;
        }

        for layer in (0..self.config.num_layers).rev() {
            let lt = &trace.layers[layer];
            let in_dim = self.config.layer_input_dim(layer);
            let mut dx = vec![0.0; t_len * in_dim];
            for dir in 0..2 {
                let idx = self.layout.lstm[layer][dir];
                let [wx, wh, b] = params.disjoint_mut([idx.w_x, idx.w_h, idx.b]);
                let weights = LstmWeights {
                    w_x: wx.value.data(),
                    w_h: wh.value.data(),
                    b: b.value.data(),
                    input_dim: in_dim,
                    hidden: hd,
                };
                let mut grads = LstmGrads {
                    w_x: wx.grad.data_mut(),
                    w_h: wh.grad.data_mut(),
                    b: b.grad.data_mut(),
                };
                let offset = dir * hd;
                let d_out_ref = &d_out;
                backward_direction(
                    &lt.input,
                    &lt.dirs[dir],
                    &weights,
                    |t| d_out_ref[t * 2 * hd + offset..t * 2 * hd + offset + hd].to_vec(),
                    &mut grads,
                    &mut dx,
                );
            }
            d_out = dx;
        }

        let emb = params.param_mut(self.layout.embedding);
        if !emb.frozen {
            let e = self.config.embedding_dim;
            let grad = emb.grad.data_mut();
            for (t, &tok) in trace.tokens.iter().enumerate() {
                for (g, d) in grad[tok * e..(tok + 1) * e]
                    .iter_mut()
                    .zip(&d_out[t * e..(t + 1) * e])
                {
                    *g += d;
                }
            }
        }
    }

    pub fn encode(&self, params: &ParamSet, tokens: &[TokenId]) -> Result<CategoryDistribution> {
        Ok(CategoryDistribution(self.forward(params, tokens)?.probs))
    }

    pub fn pair_forward(&self, params: &ParamSet, pair: &PairInstance) -> Result<PairOutput> {
        let p_a = self.encode(params, &pair.seq_a)?;
        let p_b = self.encode(params, &pair.seq_b)?;
        let similarity = cosine(&p_a, &p_b)?;
        let loss = se_cost(similarity, pair.label);
        Ok(PairOutput {
            p_a,
            p_b,
            similarity,
            loss,
        })
    }

    /// Forward plus backward of one pair; gradients of `scale * loss` from
    /// both branches are summed into the shared buffers.
    pub fn pair_backward(
        &self,
        params: &mut ParamSet,
        pair: &PairInstance,
        scale: f64,
    ) -> Result<PairOutput> {
        let ta = self.forward(params, &pair.seq_a)?;
        let tb = self.forward(params, &pair.seq_b)?;
        let similarity = cosine(&ta.probs, &tb.probs)?;
        let loss = se_cost(similarity, pair.label);
        let d_sim = scale * se_cost_backward(similarity, pair.label);
        if d_sim != 0.0 {
            let (da, db) = cosine_backward(&ta.probs, &tb.probs, d_sim)?;
            self.backward(params, &ta, &da);
            self.backward(params, &tb, &db);
        }
        Ok(PairOutput {
            p_a: CategoryDistribution(ta.probs),
            p_b: CategoryDistribution(tb.probs),
            similarity,
            loss,
        })
    }
}

/// A branch together with the one parameter set both siamese sides share.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    branch: Branch,
    params: ParamSet,
}

impl Encoder {
    /// Fresh encoder. Without `embeddings`, the table is drawn uniform
    /// (-0.1, 0.1) from the init seed. LSTM and projection weights are
    /// uniform(-init_scale, init_scale); biases are zero except the forget
    /// gate, which starts at `forget_bias`.
    pub fn new(config: EncoderConfig, embeddings: Option<EmbeddingTable>) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(config.init_seed);
        let (v, e, hd, k) = (
            config.vocab_size,
            config.embedding_dim,
            config.hidden_size,
            config.num_categories,
        );
        let table = match embeddings {
            Some(t) => {
                if t.vocab_size() != v || t.dim() != e {
                    return Err(Error::Shape(format!(
                        "embedding table is {}x{}, config expects {v}x{e}",
                        t.vocab_size(),
                        t.dim()
                    )));
                }
                t.vectors
            }
            None => {
                let data = (0..v * e).map(|_| rng.gen_range(-0.1..0.1)).collect();
                Tensor::matrix(v, e, data)?
            }
        };
        let scale = config.init_scale;
        let mut uniform = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    if scale > 0.0 {
                        rng.gen_range(-scale..scale)
                    } else {
                        0.0
                    }
                })
                .collect()
        };

        let mut params = ParamSet::new();
        let embedding = params.insert("embedding", table)?;
        params.param_mut(embedding).frozen = config.freeze_embeddings;
        let mut lstm = Vec::with_capacity(config.num_layers);
        for layer in 0..config.num_layers {
            let in_dim = config.layer_input_dim(layer);
            let mut dirs = Vec::with_capacity(2);
            for dir in ["fwd", "bwd"] {
                let w_x = params.insert(
                    format!("lstm.{layer}.{dir}.w_x"),
                    Tensor::matrix(4 * hd, in_dim, uniform(4 * hd * in_dim))?,
                )?;
                let w_h = params.insert(
                    format!("lstm.{layer}.{dir}.w_h"),
                    Tensor::matrix(4 * hd, hd, uniform(4 * hd * hd))?,
                )?;
                let mut bias = vec![0.0; 4 * hd];
                bias[hd..2 * hd].fill(config.forget_bias);
                let b = params.insert(format!("lstm.{layer}.{dir}.b"), Tensor::vector(bias)?)?;
                dirs.push(DirectionParams { w_x, w_h, b });
            }
            lstm.push([dirs[0], dirs[1]]);
        }
        let out_w = params.insert("out.w", Tensor::matrix(2 * hd, k, uniform(2 * hd * k))?)?;
        let out_b = params.insert("out.b", Tensor::zeros(&[k]))?;

        Ok(Encoder {
            branch: Branch {
                config,
                layout: Layout {
                    embedding,
                    lstm,
                    out_w,
                    out_b,
                },
            },
            params,
        })
    }

    /// Rebuilds an encoder around saved parameters, checking every shape.
    pub fn from_params(config: EncoderConfig, params: ParamSet) -> Result<Self> {
        let mut template = Encoder::new(config, None)?;
        if params.len() != template.params.len() {
            return Err(Error::Shape(format!(
                "expected {} parameter tensors, got {}",
                template.params.len(),
                params.len()
            )));
        }
        for p in template.params.iter() {
            let other = params
                .get(&p.name)
                .ok_or_else(|| Error::Shape(format!("missing parameter {}", p.name)))?;
            if other.value.shape() != p.value.shape() {
                return Err(Error::Shape(format!(
                    "{}: expected {:?}, got {:?}",
                    p.name,
                    p.value.shape(),
                    other.value.shape()
                )));
            }
        }
        // Indices follow insertion order, which both sets share by name.
        for (i, p) in template.params.iter().enumerate() {
            if params.index_of(&p.name) != Some(i) {
                return Err(Error::Shape(format!("parameter {} out of order", p.name)));
            }
        }
        template.params = params;
        Ok(template)
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.branch.config
    }

    pub fn branch(&self) -> &Branch {
        &self.branch
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Splits into the branch and mutable parameters (for gradient checks).
    pub fn split_mut(&mut self) -> (&Branch, &mut ParamSet) {
        (&self.branch, &mut self.params)
    }

    pub fn forward(&self, tokens: &[TokenId]) -> Result<SequenceTrace> {
        self.branch.forward(&self.params, tokens)
    }

    pub fn encode(&self, tokens: &[TokenId]) -> Result<CategoryDistribution> {
        self.branch.encode(&self.params, tokens)
    }

    pub fn pair_forward(&self, pair: &PairInstance) -> Result<PairOutput> {
        self.branch.pair_forward(&self.params, pair)
    }

    pub fn pair_backward(&mut self, pair: &PairInstance, scale: f64) -> Result<PairOutput> {
        self.branch.pair_backward(&mut self.params, pair, scale)
    }

    /// Single-branch classification of one sentence.
    pub fn infer_sentence(&self, sentence: &[TokenId]) -> Result<(CategoryDistribution, usize)> {
        let p = self.encode(sentence)?;
        let c = p.argmax();
        Ok((p, c))
    }

    /// Mean of the sentence distributions of a document and its argmax.
    pub fn infer_document(&self, doc: &Document<TokenId>) -> Result<(CategoryDistribution, usize)> {
        let dists = doc
            .sentences()
            .map(|s| self.encode(s))
            .collect::<Result<Vec<_>>>()?;
        if dists.is_empty() {
            return Err(Error::Empty(format!(
                "document {} has no sentences",
                doc.id
            )));
        }
        let p = CategoryDistribution::mean(&dists)?;
        let c = p.argmax();
        Ok((p, c))
    }
}
