//! Whole-model gradient check over randomly drawn small encoders.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Encoder, EncoderConfig};
use crate::corpus::EmbeddingTable;
use crate::diffcore::{grad_check, ParamSet, Tensor};
use crate::pairing::{PairInstance, SentenceRef};
use crate::{seeded_rng, Error, Result, Rng as ChaRng};

/// How random check cases are drawn.
///
/// Finite differences are only meaningful where the loss is smooth and not
/// flat at the resolution of `eps`, so cases are redrawn when a max-pool
/// winner is within `min_pool_margin` of a runner-up (a kink) or when the
/// two sides' cosine similarity exceeds `max_similarity` (cosine is
/// stationary where the distributions are parallel). Cases with a loss above
/// `max_loss` are redrawn too: rounding noise in the difference quotient
/// grows with the loss value, and at a loss near 1 it reaches the 1e-12
/// absolute resolution that a 1e-4 tolerance over the 1e-8 floor demands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckSpec {
    pub cases: usize,
    pub seed: u64,
    pub vocab_size: usize,
    pub max_embedding_dim: usize,
    pub max_hidden: usize,
    pub max_categories: usize,
    pub max_len: usize,
    /// Layer counts cycled through case by case.
    pub layers: Vec<usize>,
    /// Scale of embeddings and LSTM weights.
    pub weight_scale: f64,
    /// Scale of the output projection.
    pub output_scale: f64,
    pub min_pool_margin: f64,
    pub max_similarity: f64,
    pub max_loss: f64,
    pub eps: f64,
    pub tolerance: f64,
    /// Give up after this many rejected draws.
    pub max_rejections: usize,
}

impl Default for GradCheckSpec {
    fn default() -> Self {
        Self {
            cases: 100,
            seed: 0,
            vocab_size: 7,
            max_embedding_dim: 4,
            max_hidden: 4,
            max_categories: 3,
            max_len: 5,
            layers: vec![1, 2],
            weight_scale: 1.0,
            output_scale: 3.0,
            min_pool_margin: 1e-3,
            max_similarity: 0.9,
            max_loss: 0.25,
            eps: 1e-4,
            tolerance: 1e-4,
            max_rejections: 100_000,
        }
    }
}

/// Result of one accepted case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub hidden: usize,
    pub categories: usize,
    pub layers: usize,
    pub len_a: usize,
    pub len_b: usize,
    pub loss: f64,
    pub max_rel_error: f64,
    pub worst_tensor: String,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WholeModelReport {
    pub cases: Vec<CaseResult>,
    pub rejected: usize,
    pub tolerance: f64,
}

impl WholeModelReport {
    pub fn max_rel_error(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&CaseResult> {
        self.cases
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }

    pub fn passed(&self) -> bool {
        !self.cases.is_empty() && self.max_rel_error() < self.tolerance
    }
}

impl GradCheckSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("gradcheck: {m}")));
        if self.cases == 0 {
            return bad("cases must be positive");
        }
        if self.vocab_size < 1
            || self.max_embedding_dim < 1
            || self.max_hidden < 1
            || self.max_len < 1
        {
            return bad("vocab_size, max_embedding_dim, max_hidden and max_len must be positive");
        }
        if self.max_categories < 2 {
            return bad("max_categories must be at least 2");
        }
        if self.layers.is_empty() || self.layers.contains(&0) {
            return bad("layers must be a non-empty list of positive counts");
        }
        if !(self.eps > 0.0
            && self.tolerance > 0.0
            && self.weight_scale > 0.0
            && self.output_scale > 0.0)
        {
            return bad("eps, tolerance and scales must be positive");
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

fn draw_pair(rng: &mut ChaRng, spec: &GradCheckSpec) -> PairInstance {
    let mut seq = || {
        let len = rng.gen_range(1..=spec.max_len);
        (0..len)
            .map(|_| rng.gen_range(0..spec.vocab_size as u32))
            .collect::<Vec<_>>()
    };
    let (seq_a, seq_b) = (seq(), seq());
    let src = SentenceRef {
        doc_id: "gradcheck".into(),
        location: None,
    };
    PairInstance {
        seq_a,
        seq_b,
        label: rng.gen_range(0..2),
        source_a: src.clone(),
        source_b: src,
    }
}

fn draw_encoder(rng: &mut ChaRng, spec: &GradCheckSpec, layers: usize) -> Result<Encoder> {
    let mut config = EncoderConfig::new(spec.vocab_size, rng.gen_range(2..=spec.max_categories));
    config.embedding_dim = rng.gen_range(1..=spec.max_embedding_dim);
    config.hidden_size = rng.gen_range(1..=spec.max_hidden);
    config.num_layers = layers;
    config.freeze_embeddings = false;
    config.init_scale = spec.weight_scale;
    config.init_seed = rng.gen();
    let table = Tensor::matrix(
        spec.vocab_size,
        config.embedding_dim,
        uniform(
            rng,
            spec.vocab_size * config.embedding_dim,
            spec.weight_scale,
        ),
    )?;
    let mut encoder = Encoder::new(config, Some(EmbeddingTable::new(table, false)?))?;
    let out = encoder
        .params()
        .index_of("out.w")
        .expect("encoder has an output projection");
    let n = encoder.params().param(out).value.len();
    let w = uniform(rng, n, spec.output_scale);
    encoder
        .params_mut()
        .param_mut(out)
        .value
        .data_mut()
        .copy_from_slice(&w);
    Ok(encoder)
}

/// Checks `pair_backward` of freshly drawn encoders against central
/// differences of `pair_forward`, one accepted case per entry of the report.
pub fn whole_model_gradcheck(spec: &GradCheckSpec) -> Result<WholeModelReport> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let mut cases = Vec::with_capacity(spec.cases);
    let mut rejected = 0;
    while cases.len() < spec.cases {
        if rejected > spec.max_rejections {
            return Err(Error::Infeasible(format!(
                "gradcheck: {rejected} draws rejected before {} cases were found",
                spec.cases
            )));
        }
        let layers = spec.layers[cases.len() % spec.layers.len()];
        let mut encoder = draw_encoder(&mut rng, spec, layers)?;
        let pair = draw_pair(&mut rng, spec);
        let margin = encoder
            .forward(&pair.seq_a)?
            .pool_margin()
            .min(encoder.forward(&pair.seq_b)?.pool_margin());
        let out = encoder.pair_forward(&pair)?;
        if margin < spec.min_pool_margin
            || out.similarity > spec.max_similarity
            || out.loss > spec.max_loss
        {
            rejected += 1;
            continue;
        }
        encoder.params_mut().zero_grad();
        encoder.pair_backward(&pair, 1.0)?;
        let (branch, params) = encoder.split_mut();
        let report = grad_check(params, spec.eps, spec.tolerance, |p: &ParamSet| {
            branch
                .pair_forward(p, &pair)
                .map(|o| o.loss)
                .unwrap_or(f64::NAN)
        });
        let worst = report
            .tensors
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
            .expect("at least one trainable tensor");
        let config = encoder.config();
        cases.push(CaseResult {
            hidden: config.hidden_size,
            categories: config.num_categories,
            layers: config.num_layers,
            len_a: pair.seq_a.len(),
            len_b: pair.seq_b.len(),
            loss: out.loss,
            max_rel_error: worst.max_rel_error,
            worst_tensor: worst.name.clone(),
            analytic: worst.analytic,
            numeric: worst.numeric,
        });
    }
    Ok(WholeModelReport {
        cases,
        rejected,
        tolerance: spec.tolerance,
    })
}
