//! Mini-batch training of the siamese encoder on pseudo-labeled pairs, with
//! the logging needed to follow cost, accuracy and instance trajectories.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::corpus::EncodedCorpus;
use crate::diffcore::{Optimizer, ParamSet, ParamSetState};
use crate::encoder::{Encoder, EncoderConfig};
use crate::eval::{self, ClusteringReport};
use crate::pairing::PairInstance;
use crate::{Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

fn default_lr() -> f64 {
    1e-3
}
fn default_l2() -> f64 {
    1e-4
}
fn default_batch() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_l2")]
    pub l2: f64,
    pub epochs: usize,
    /// Gradients are averaged over a batch before one update.
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
    /// Optimizer steps between history records; one epoch when absent.
    #[serde(default)]
    pub eval_every: Option<u64>,
    /// Pair indices whose similarity and distributions are logged.
    #[serde(default)]
    pub track: Vec<usize>,
    /// Final checkpoint location.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    /// Also checkpoint every this many optimizer steps, next to the final
    /// one (see [`step_checkpoint_path`]).
    #[serde(default)]
    pub checkpoint_every: Option<u64>,
    /// Stop after this many optimizer steps in total, even mid-epoch.
    #[serde(default)]
    pub max_steps: Option<u64>,
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        Self {
            optimizer: OptimizerKind::Sgd,
            learning_rate: default_lr(),
            l2: default_l2(),
            epochs,
            batch_size: default_batch(),
            seed,
            eval_every: None,
            track: Vec::new(),
            checkpoint: None,
            checkpoint_every: None,
            max_steps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!(
                "l2 must be non-negative, got {}",
                self.l2
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.eval_every == Some(0) {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> Optimizer {
        match self.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd {
                lr: self.learning_rate,
                l2: self.l2,
            },
            OptimizerKind::Adam => Optimizer::adam(self.learning_rate, self.l2),
        }
    }
}

/// One row of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub step: u64,
    pub epoch: usize,
    /// Mean pair cost over the updates since the previous record.
    pub mean_cost: f64,
    /// Hungarian-mapped accuracy on the monitor corpus when it has labels.
    pub accuracy: Option<f64>,
    /// DBI of the monitor corpus document distributions.
    pub dbi: Option<f64>,
    /// Mean and max of the pooled top-layer activations over monitor
    /// sentences.
    pub hidden_mean: Option<f64>,
    pub hidden_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub step: u64,
    pub similarity: f64,
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedSeries {
    pub pair_index: usize,
    pub label: u8,
    pub points: Vec<TrackPoint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<HistoryRecord>,
    pub tracks: Vec<TrackedSeries>,
}

/// Current similarity and distributions of the selected pairs.
pub fn track_instances(
    encoder: &Encoder,
    pairs: &[PairInstance],
    indices: &[usize],
    step: u64,
) -> Result<Vec<TrackPoint>> {
    indices
        .iter()
        .map(|&i| {
            let pair = pairs.get(i).ok_or_else(|| {
                Error::Config(format!(
                    "tracked pair {i} out of range ({} pairs)",
                    pairs.len()
                ))
            })?;
            let out = encoder.pair_forward(pair)?;
            Ok(TrackPoint {
                step,
                similarity: out.similarity,
                p_a: out.p_a.into_vec(),
                p_b: out.p_b.into_vec(),
            })
        })
        .collect()
}

/// Document distributions, hard assignments and hidden statistics.
struct Snapshot {
    distributions: Vec<Vec<f64>>,
    clusters: Vec<usize>,
    hidden_mean: f64,
    hidden_max: f64,
}

fn snapshot(encoder: &Encoder, corpus: &EncodedCorpus) -> Result<Snapshot> {
    let k = encoder.config().num_categories;
    let mut distributions = Vec::with_capacity(corpus.len());
    let mut clusters = Vec::with_capacity(corpus.len());
    let (mut sum, mut count, mut max) = (0.0, 0usize, f64::NEG_INFINITY);
    for doc in &corpus.documents {
        let mut mean = vec![0.0; k];
        let mut sentences = 0usize;
        for s in doc.sentences() {
            let trace = encoder.forward(s)?;
            for (m, p) in mean.iter_mut().zip(trace.distribution()) {
                *m += p;
            }
            for &h in trace.pooled() {
                sum += h;
                max = max.max(h);
            }
            count += trace.pooled().len();
            sentences += 1;
        }
        if sentences == 0 {
            return Err(Error::Empty(format!(
                "document {} has no sentences",
                doc.id
            )));
        }
        mean.iter_mut().for_each(|m| *m /= sentences as f64);
        clusters.push(argmax(&mean));
        distributions.push(mean);
    }
    Ok(Snapshot {
        distributions,
        clusters,
        hidden_mean: sum / count.max(1) as f64,
        hidden_max: max,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Infers every document and evaluates against the corpus gold labels.
pub fn evaluate_checkpoint(encoder: &Encoder, corpus: &EncodedCorpus) -> Result<ClusteringReport> {
    let gold = corpus.gold_labels().map_err(Error::MissingLabel)?;
    let snap = snapshot(encoder, corpus)?;
    eval::report(
        &gold,
        &snap.clusters,
        Some(&snap.distributions),
        Some(encoder.config().num_categories),
    )
}

/// Shuffled pair order of one epoch. Depends only on the seed and the
/// epoch, so training can resume from any step.
fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Trains `encoder` in place on `pairs`.
///
/// Training continues from the encoder's optimizer step, so a loaded
/// checkpoint resumes exactly where it stopped. `monitor` supplies the
/// documents for accuracy, DBI and hidden statistics at each record.
pub fn train(
    encoder: &mut Encoder,
    pairs: &[PairInstance],
    config: &TrainConfig,
    monitor: Option<&EncodedCorpus>,
) -> Result<TrainHistory> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::Empty("no training pairs".into()));
    }
    let optimizer = config.optimizer();
    let batches_per_epoch = pairs.len().div_ceil(config.batch_size) as u64;
    let mut total = batches_per_epoch * config.epochs as u64;
    if let Some(cap) = config.max_steps {
        total = total.min(cap);
    }
    let eval_every = config.eval_every.unwrap_or(batches_per_epoch);
    let monitor_labels = monitor.and_then(|m| m.gold_labels().ok());

    let mut history = TrainHistory {
        records: Vec::new(),
        tracks: config
            .track
            .iter()
            .map(|&i| {
                let label = pairs.get(i).map_or(0, |p| p.label);
                TrackedSeries {
                    pair_index: i,
                    label,
                    points: Vec::new(),
                }
            })
            .collect(),
    };
    // Fail on bad track indices before spending any compute.
    track_instances(encoder, pairs, &config.track, 0)?;

    let mut step = encoder.params().optimizer_step();
    let mut order: Option<(usize, Vec<usize>)> = None;
    let (mut cost_sum, mut cost_count) = (0.0, 0usize);
    while step < total {
        let epoch = (step / batches_per_epoch) as usize;
        if order.as_ref().map(|o| o.0) != Some(epoch) {
            order = Some((epoch, epoch_order(config.seed, epoch, pairs.len())));
        }
        let idx = &order.as_ref().expect("set above").1;
        let b = (step % batches_per_epoch) as usize;
        let batch = &idx[b * config.batch_size..((b + 1) * config.batch_size).min(pairs.len())];
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let out = encoder.pair_backward(&pairs[i], scale)?;
            if !out.loss.is_finite() {
                return Err(Error::Divergence { step });
            }
            cost_sum += out.loss;
            cost_count += 1;
        }
        optimizer.step(encoder.params_mut());
        step += 1;
        if let (Some(every), Some(path)) = (config.checkpoint_every, &config.checkpoint) {
            if step.is_multiple_of(every) && step < total {
                save_checkpoint(&step_checkpoint_path(path, step), encoder)?;
            }
        }

        if step.is_multiple_of(eval_every) || step == total {
            let mut record = HistoryRecord {
                step,
                epoch: ((step - 1) / batches_per_epoch) as usize,
                mean_cost: cost_sum / cost_count.max(1) as f64,
                accuracy: None,
                dbi: None,
                hidden_mean: None,
                hidden_max: None,
            };
            if !record.mean_cost.is_finite() {
                return Err(Error::Divergence { step });
            }
            if let Some(corpus) = monitor {
                let snap = snapshot(encoder, corpus)?;
                record.dbi = eval::dbi(&snap.distributions, &snap.clusters).ok();
                record.hidden_mean = Some(snap.hidden_mean);
                record.hidden_max = Some(snap.hidden_max);
                if let Some(gold) = &monitor_labels {
                    let r = eval::report(
                        gold,
                        &snap.clusters,
                        None,
                        Some(encoder.config().num_categories),
                    )?;
                    record.accuracy = Some(r.accuracy);
                }
            }
            for (series, point) in
                history
                    .tracks
                    .iter_mut()
                    .zip(track_instances(encoder, pairs, &config.track, step)?)
            {
                series.points.push(point);
            }
            history.records.push(record);
            cost_sum = 0.0;
            cost_count = 0;
        }
    }
    if let Some(path) = &config.checkpoint {
        save_checkpoint(path, encoder)?;
    }
    Ok(history)
}

/// `dir/name.json` becomes `dir/name.step{step}.json`.
pub fn step_checkpoint_path(path: &Path, step: u64) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.step{step}.{}", ext.to_string_lossy()),
        None => format!("{stem}.step{step}"),
    };
    path.with_file_name(name)
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub encoder: EncoderConfig,
    pub params: ParamSetState,
}

/// Writes encoder config, parameters and optimizer state as JSON.
pub fn save_checkpoint(path: &Path, encoder: &Encoder) -> Result<()> {
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION,
        encoder: encoder.config().clone(),
        params: encoder.params().to_state(),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, serde_json::to_string(&ckpt)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Encoder> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::Serde(format!(
            "unsupported checkpoint version {}",
            ckpt.version
        )));
    }
    Encoder::from_params(ckpt.encoder, ParamSet::from_state(ckpt.params)?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

/// History CSV: `step,epoch,mean_cost,accuracy,dbi,hidden_mean,hidden_max`,
/// with empty cells for values that were not computed.
pub fn write_history_csv<W: Write>(history: &TrainHistory, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "step,epoch,mean_cost,accuracy,dbi,hidden_mean,hidden_max"
    )?;
    for r in &history.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            r.epoch,
            r.mean_cost,
            opt(r.accuracy),
            opt(r.dbi),
            opt(r.hidden_mean),
            opt(r.hidden_max)
        )?;
    }
    Ok(())
}

/// One tracked pair: `step,similarity,p_a_0..,p_b_0..`.
pub fn write_track_csv<W: Write>(series: &TrackedSeries, mut out: W) -> std::io::Result<()> {
    let k = series.points.first().map_or(0, |p| p.p_a.len());
    let mut header = vec!["step".to_string(), "similarity".to_string()];
    header.extend((0..k).map(|i| format!("p_a_{i}")));
    header.extend((0..k).map(|i| format!("p_b_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for p in &series.points {
        let mut row = vec![p.step.to_string(), p.similarity.to_string()];
        row.extend(p.p_a.iter().chain(&p.p_b).map(f64::to_string));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
