//! The `textclust` command line: run configuration, overrides and the
//! `synth`, `pairs`, `train`, `infer`, `eval` and `gradcheck` commands.
//!
//! One TOML file describes a run. `synth`, `pairs` and `train` take it with
//! `--config` and a mandatory `--seed`; any trailing `--section.key value`
//! arguments override single fields. All sub-seeds are fixed offsets of
//! `--seed`:
//!
//! | stream | seed |
//! |---|---|
//! | synthetic corpus | seed |
//! | pair sampling | seed + 1 |
//! | encoder init | seed + 2 |
//! | random embeddings | seed + 3 |
//! | epoch shuffles | seed + 4 |

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    self, build_vocab, generate_synthetic, load_corpus, load_embeddings, load_gold_labels,
    load_vocab, random_embeddings, save_vocab, write_lines, CorpusFormat, EncodedCorpus,
    SyntheticSpec, Vocabulary,
};
use crate::encoder::{whole_model_gradcheck, Encoder, EncoderConfig, GradCheckSpec};
use crate::eval;
use crate::pairing::{
    build_training_set, label_noise_rate, read_pairs_tsv, write_pairs_tsv, PairSamplerConfig,
    SamplingMode,
};
use crate::trainer::{
    load_checkpoint, train, write_history_csv, write_track_csv, OptimizerKind, TrainConfig,
};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Planted-topic corpus parameters; the seed comes from `--seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub num_topics: usize,
    pub words_per_topic: usize,
    pub topic_purity: f64,
    pub docs_per_topic: usize,
    pub paragraphs_per_doc: usize,
    pub sentences_per_paragraph: usize,
    pub tokens_per_sentence: usize,
}

fn default_min_count() -> usize {
    1
}
fn default_max_len() -> usize {
    corpus::DEFAULT_MAX_SENTENCE_LEN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: CorpusFormat,
    /// `doc_id<TAB>label` file.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Fixed vocabulary, one token per line in id order. Built from the
    /// corpus when absent.
    #[serde(default)]
    pub vocab: Option<PathBuf>,
    #[serde(default = "default_min_count")]
    pub min_count: usize,
    #[serde(default)]
    pub max_vocab: Option<usize>,
    /// Sentences are truncated to this many tokens.
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    /// The last `held_out` documents are kept out of pair sampling.
    #[serde(default)]
    pub held_out: usize,
}

fn default_format() -> CorpusFormat {
    CorpusFormat::Lines
}

fn default_embedding_dim() -> usize {
    300
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    /// GloVe-style text vectors. Random uniform(-0.1, 0.1) when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "default_embedding_dim")]
    pub dim: usize,
    #[serde(default)]
    pub trainable: bool,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self {
            path: None,
            dim: default_embedding_dim(),
            trainable: false,
        }
    }
}

fn default_min_distance() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsSection {
    pub mode: SamplingMode,
    pub pos_ratio: f64,
    #[serde(default = "default_min_distance")]
    pub min_negative_distance: usize,
    pub num_instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSection {
    pub num_categories: usize,
    #[serde(default = "default_hidden")]
    pub hidden_size: usize,
    #[serde(default = "default_layers")]
    pub num_layers: usize,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default = "default_forget_bias")]
    pub forget_bias: f64,
}

fn default_hidden() -> usize {
    256
}
fn default_layers() -> usize {
    1
}
fn default_init_scale() -> f64 {
    0.1
}
fn default_forget_bias() -> f64 {
    1.0
}

/// Documents evaluated at every history record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    /// The held-out tail, or nothing when `corpus.held_out` is 0.
    #[default]
    HeldOut,
    All,
    None,
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
pub struct TrainSection {
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_l2")]
    pub l2: f64,
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub eval_every: Option<u64>,
    #[serde(default)]
    pub checkpoint_every: Option<u64>,
    #[serde(default)]
    pub track: Vec<usize>,
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub monitor: Monitor,
}

/// One run: where its inputs live, how each stage is configured, and the
/// directory all outputs go to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Filled from `--seed`; a value in the file is overwritten.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSection>,
    /// Defaults to the files `synth` writes when a `synthetic` section is
    /// present.
    #[serde(default)]
    pub corpus: Option<CorpusSection>,
    #[serde(default)]
    pub embeddings: EmbeddingSection,
    #[serde(default)]
    pub pairs: Option<PairsSection>,
    #[serde(default)]
    pub encoder: Option<EncoderSection>,
    #[serde(default)]
    pub train: Option<TrainSection>,
}

impl RunConfig {
    /// Parses a config, applying `--section.key value` overrides first.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        apply_overrides(&mut table, overrides)?;
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required".into()))
    }

    pub fn corpus_section(&self) -> Result<CorpusSection> {
        match (&self.corpus, &self.synthetic) {
            (Some(c), _) => Ok(c.clone()),
            (None, Some(_)) => Ok(CorpusSection {
                path: self.output_dir.join(SYNTH_CORPUS),
                format: CorpusFormat::Lines,
                labels: Some(self.output_dir.join(SYNTH_LABELS)),
                vocab: Some(self.output_dir.join(SYNTH_VOCAB)),
                min_count: default_min_count(),
                max_vocab: None,
                max_len: default_max_len(),
                held_out: 0,
            }),
            (None, None) => Err(Error::Config("missing [corpus] section".into())),
        }
    }

    fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| Error::Config(format!("missing [{name}] section")))
    }

    pub fn vocab_path(&self) -> PathBuf {
        self.output_dir.join("vocab.txt")
    }

    pub fn pairs_path(&self) -> PathBuf {
        self.output_dir.join("pairs.tsv")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.output_dir.join("checkpoint.json")
    }

    pub fn predictions_path(&self) -> PathBuf {
        self.output_dir.join("predictions.jsonl")
    }
}

const SYNTH_CORPUS: &str = "corpus.txt";
const SYNTH_LABELS: &str = "gold.tsv";
const SYNTH_VOCAB: &str = "synthetic_vocab.txt";

/// Sets `section.key` (or a top-level `key`) in `table`. Values are parsed
/// as TOML and fall back to plain strings, so `--pairs.mode distance` works
/// unquoted.
fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    if !overrides.len().is_multiple_of(2) {
        return Err(Error::Config(format!(
            "override {:?} has no value",
            overrides.last().expect("odd length")
        )));
    }
    for kv in overrides.chunks(2) {
        let key = kv[0]
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected --section.key, got {:?}", kv[0])))?;
        let value = match toml::from_str::<toml::Table>(&format!("v = {}", kv[1])) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(kv[1].clone()),
        };
        let path: Vec<&str> = key.split('.').collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("bad override key {key:?}")));
        }
        let (last, parents) = path.split_last().expect("split yields one item");
        let mut node = &mut *table;
        for p in parents {
            node = node
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("override {key:?}: {p} is not a section")))?;
        }
        node.insert(last.to_string(), value);
    }
    Ok(())
}

#[derive(Debug, Parser)]
#[command(
    name = "textclust",
    version,
    about = "Neural text clustering with a siamese BiLSTM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Field overrides, e.g. `--train.epochs 5`.
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "--SECTION.KEY VALUE"
    )]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a planted-topic corpus, gold labels and vocabulary.
    Synth(RunArgs),
    /// Sample pseudo-labeled sentence pairs.
    Pairs(RunArgs),
    /// Train the encoder on the sampled pairs.
    Train(RunArgs),
    /// Assign documents to clusters with a trained checkpoint.
    Infer {
        /// Fills the defaults below from a run config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        format: Option<CorpusFormat>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        max_len: Option<usize>,
        /// Only the last N documents.
        #[arg(long)]
        held_out: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score cluster assignments against gold labels.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        /// JSONL from `infer`, or `doc_id<TAB>cluster` lines.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Counts clusters that received no document.
        #[arg(long)]
        num_clusters: Option<usize>,
        /// Output directory for report.json and report.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare whole-model gradients against finite differences.
    Gradcheck {
        /// TOML with the fields of the check (cases, sizes, tolerance...).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Writes the full per-case report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence { .. } => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Synth(args) => cmd_synth(&load_run(&args, "synth")?).map(|_| EXIT_OK),
        Command::Pairs(args) => cmd_pairs(&load_run(&args, "pairs")?).map(|_| EXIT_OK),
        Command::Train(args) => cmd_train(&load_run(&args, "train")?).map(|_| EXIT_OK),
        Command::Infer {
            config,
            checkpoint,
            corpus,
            format,
            vocab,
            max_len,
            held_out,
            out,
        } => {
            let run = config.as_deref().map(|p| read_config(p, &[])).transpose()?;
            let section = run.as_ref().map(RunConfig::corpus_section).transpose()?;
            let need = |v: Option<PathBuf>, name: &str| {
                v.ok_or_else(|| Error::Config(format!("--{name} is required without --config")))
            };
            let args = InferArgs {
                checkpoint: need(
                    checkpoint.or(run.as_ref().map(RunConfig::checkpoint_path)),
                    "checkpoint",
                )?,
                corpus: need(
                    corpus.or(section.as_ref().map(|s| s.path.clone())),
                    "corpus",
                )?,
                format: format
                    .or(section.as_ref().map(|s| s.format))
                    .unwrap_or(CorpusFormat::Lines),
                vocab: need(vocab.or(run.as_ref().map(RunConfig::vocab_path)), "vocab")?,
                max_len: max_len
                    .or(section.as_ref().map(|s| s.max_len))
                    .unwrap_or(default_max_len()),
                held_out: held_out
                    .or(section.as_ref().map(|s| s.held_out))
                    .filter(|&n| n > 0),
                out: need(out.or(run.as_ref().map(RunConfig::predictions_path)), "out")?,
            };
            cmd_infer(&args).map(|_| EXIT_OK)
        }
        Command::Eval {
            config,
            predictions,
            gold,
            num_clusters,
            out,
        } => {
            let run = config.as_deref().map(|p| read_config(p, &[])).transpose()?;
            let section = run.as_ref().map(RunConfig::corpus_section).transpose()?;
            let need = |v: Option<PathBuf>, name: &str| {
                v.ok_or_else(|| Error::Config(format!("--{name} is required without --config")))
            };
            let args = EvalArgs {
                predictions: need(
                    predictions.or(run.as_ref().map(RunConfig::predictions_path)),
                    "predictions",
                )?,
                gold: need(gold.or(section.and_then(|s| s.labels)), "gold")?,
                num_clusters: num_clusters.or(run
                    .as_ref()
                    .and_then(|r| r.encoder.as_ref())
                    .map(|e| e.num_categories)),
                out: need(out.or(run.map(|r| r.output_dir)), "out")?,
            };
            cmd_eval(&args).map(|_| EXIT_OK)
        }
        Command::Gradcheck { config, seed, out } => {
            let mut spec = match config {
                Some(path) => {
                    let text = read_text(&path)?;
                    toml::from_str(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                }
                None => GradCheckSpec::default(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            cmd_gradcheck(&spec, out.as_deref())
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_file(path: &Path) -> Result<BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn read_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = read_text(path)?;
    RunConfig::parse(&text, overrides).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Reads the config, applies overrides and `--seed`, and records both the
/// verbatim file and the resolved config in the output directory.
fn load_run(args: &RunArgs, command: &str) -> Result<RunConfig> {
    let mut run = read_config(&args.config, &args.overrides)?;
    run.seed = Some(args.seed);
    create_dir(&run.output_dir)?;
    write_text(
        &run.output_dir.join("config.toml"),
        &read_text(&args.config)?,
    )?;
    write_text(
        &run.output_dir.join(format!("resolved.{command}.toml")),
        &run.to_toml()?,
    )?;
    Ok(run)
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

/// Writes `corpus.txt`, `gold.tsv` and `synthetic_vocab.txt` to the output
/// directory.
pub fn cmd_synth(run: &RunConfig) -> Result<()> {
    let s = run.section(&run.synthetic, "synthetic")?;
    let spec = SyntheticSpec {
        num_topics: s.num_topics,
        words_per_topic: s.words_per_topic,
        topic_purity: s.topic_purity,
        docs_per_topic: s.docs_per_topic,
        paragraphs_per_doc: s.paragraphs_per_doc,
        sentences_per_paragraph: s.sentences_per_paragraph,
        tokens_per_sentence: s.tokens_per_sentence,
        seed: run.seed()?,
    };
    let (encoded, vocab) = generate_synthetic(&spec)?;
    let dir = &run.output_dir;
    let path = dir.join(SYNTH_CORPUS);
    let mut out = create_file(&path)?;
    write_lines(&corpus::decode(&encoded, &vocab), &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&path, e))?;
    let path = dir.join(SYNTH_LABELS);
    let mut out = create_file(&path)?;
    encoded
        .documents
        .iter()
        .try_for_each(|d| {
            writeln!(
                out,
                "{}\t{}",
                d.id,
                d.gold_label.expect("synthetic documents are labeled")
            )
        })
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&path, e))?;
    save_vocab(&vocab, &dir.join(SYNTH_VOCAB))?;
    println!(
        "synth: {} documents, {} sentences, vocabulary {} -> {}",
        encoded.len(),
        encoded.num_sentences(),
        vocab.len(),
        dir.display()
    );
    Ok(())
}

/// Loads and encodes the corpus of a run, attaching gold labels when a
/// labels file is configured.
fn load_encoded(section: &CorpusSection, vocab: &Vocabulary) -> Result<EncodedCorpus> {
    let raw = read_raw(section)?;
    Ok(corpus::encode(&raw, vocab, section.max_len))
}

fn read_raw(section: &CorpusSection) -> Result<corpus::RawCorpus> {
    require_file(&section.path, "corpus")?;
    let mut raw = load_corpus(&section.path, section.format)?;
    if let Some(labels) = &section.labels {
        require_file(labels, "labels file")?;
        raw.attach_labels(&load_gold_labels(labels)?);
    }
    Ok(raw)
}

fn split_held_out(
    corpus: EncodedCorpus,
    held_out: usize,
) -> Result<(EncodedCorpus, EncodedCorpus)> {
    let n = corpus.len();
    if held_out >= n {
        return Err(Error::Config(format!(
            "held_out {held_out} leaves no training documents out of {n}"
        )));
    }
    Ok(corpus.partition(|i, _| i < n - held_out))
}

/// Fixes the vocabulary (`vocab.txt`), samples pairs from the training
/// documents (`pairs.tsv`) and, with gold labels, reports their label noise
/// (`noise.json`).
pub fn cmd_pairs(run: &RunConfig) -> Result<()> {
    let section = run.corpus_section()?;
    let p = run.section(&run.pairs, "pairs")?;
    let raw = read_raw(&section)?;
    let vocab = match &section.vocab {
        Some(path) => {
            require_file(path, "vocabulary")?;
            load_vocab(path)?
        }
        None => build_vocab(
            &raw,
            section.min_count,
            section.max_vocab.unwrap_or(usize::MAX),
        ),
    };
    save_vocab(&vocab, &run.vocab_path())?;
    let (train_docs, _) = split_held_out(
        corpus::encode(&raw, &vocab, section.max_len),
        section.held_out,
    )?;
    let config = PairSamplerConfig {
        mode: p.mode,
        pos_ratio: p.pos_ratio,
        min_negative_distance: p.min_negative_distance,
        num_instances: p.num_instances,
        seed: run.seed()?.wrapping_add(1),
    };
    let pairs = build_training_set(&train_docs, &config)?;
    let path = run.pairs_path();
    let mut out = create_file(&path)?;
    write_pairs_tsv(&pairs, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&path, e))?;
    print!(
        "pairs: {} instances from {} documents",
        pairs.len(),
        train_docs.len()
    );
    if train_docs.documents.iter().all(|d| d.gold_label.is_some()) {
        let noise = label_noise_rate(&pairs, &train_docs)?;
        write_text(
            &run.output_dir.join("noise.json"),
            &serde_json::to_string_pretty(&noise)?,
        )?;
        print!(
            ", positive noise {:.4}, negative noise {:.4}",
            noise.positive_noise, noise.negative_noise
        );
    }
    println!();
    Ok(())
}

/// Trains on `pairs.tsv` and writes `checkpoint.json`, `history.csv` and one
/// `track_{i}.csv` per tracked pair.
pub fn cmd_train(run: &RunConfig) -> Result<()> {
    let seed = run.seed()?;
    let e = run.section(&run.encoder, "encoder")?;
    let t = run.section(&run.train, "train")?;
    require_file(&run.vocab_path(), "vocabulary (run `pairs` first)")?;
    require_file(&run.pairs_path(), "pair file (run `pairs` first)")?;
    let vocab = load_vocab(&run.vocab_path())?;
    let pairs = read_pairs_tsv(BufReader::new(
        std::fs::File::open(run.pairs_path()).map_err(|err| Error::io(run.pairs_path(), err))?,
    ))?;

    let emb = &run.embeddings;
    let mut table = match &emb.path {
        Some(path) => {
            require_file(path, "embedding file")?;
            let (table, found) = load_embeddings(path, &vocab, emb.dim, seed.wrapping_add(3))?;
            println!(
                "train: {found} of {} vocabulary tokens have pretrained vectors",
                vocab.len()
            );
            table
        }
        None => random_embeddings(vocab.len(), emb.dim, seed.wrapping_add(3)),
    };
    table.frozen = !emb.trainable;
    let mut config = EncoderConfig::new(vocab.len(), e.num_categories);
    config.embedding_dim = emb.dim;
    config.hidden_size = e.hidden_size;
    config.num_layers = e.num_layers;
    config.freeze_embeddings = !emb.trainable;
    config.init_seed = seed.wrapping_add(2);
    config.init_scale = e.init_scale;
    config.forget_bias = e.forget_bias;
    let mut encoder = Encoder::new(config, Some(table))?;

    let monitor = match t.monitor {
        Monitor::None => None,
        Monitor::All => Some(load_encoded(&run.corpus_section()?, &vocab)?),
        Monitor::HeldOut => {
            let section = run.corpus_section()?;
            if section.held_out == 0 {
                None
            } else {
                Some(split_held_out(load_encoded(&section, &vocab)?, section.held_out)?.1)
            }
        }
    };

    let tc = TrainConfig {
        optimizer: t.optimizer,
        learning_rate: t.learning_rate,
        l2: t.l2,
        epochs: t.epochs,
        batch_size: t.batch_size,
        seed: seed.wrapping_add(4),
        eval_every: t.eval_every,
        track: t.track.clone(),
        checkpoint: Some(run.checkpoint_path()),
        checkpoint_every: t.checkpoint_every,
        max_steps: t.max_steps,
    };
    let history = train(&mut encoder, &pairs, &tc, monitor.as_ref())?;

    let path = run.output_dir.join("history.csv");
    let mut out = create_file(&path)?;
    write_history_csv(&history, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&path, e))?;
    for series in &history.tracks {
        let path = run
            .output_dir
            .join(format!("track_{}.csv", series.pair_index));
        let mut out = create_file(&path)?;
        write_track_csv(series, &mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(&path, e))?;
    }
    if let Some(last) = history.records.last() {
        print!("train: step {} mean cost {:.5}", last.step, last.mean_cost);
        if let Some(acc) = last.accuracy {
            print!(" monitor accuracy {acc:.4}");
        }
        println!();
    }
    Ok(())
}

pub struct InferArgs {
    pub checkpoint: PathBuf,
    pub corpus: PathBuf,
    pub format: CorpusFormat,
    pub vocab: PathBuf,
    pub max_len: usize,
    pub held_out: Option<usize>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub cluster: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<f64>>,
}

/// Writes one JSON line `{"id", "cluster", "distribution"}` per document.
pub fn cmd_infer(args: &InferArgs) -> Result<()> {
    require_file(&args.checkpoint, "checkpoint")?;
    require_file(&args.vocab, "vocabulary")?;
    require_file(&args.corpus, "corpus")?;
    let encoder = load_checkpoint(&args.checkpoint)?;
    let vocab = load_vocab(&args.vocab)?;
    if vocab.len() != encoder.config().vocab_size {
        return Err(Error::Shape(format!(
            "vocabulary has {} tokens, checkpoint expects {}",
            vocab.len(),
            encoder.config().vocab_size
        )));
    }
    let mut docs = corpus::encode(
        &load_corpus(&args.corpus, args.format)?,
        &vocab,
        args.max_len,
    );
    if let Some(n) = args.held_out {
        docs = split_held_out(docs, n)?.1;
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let mut out = create_file(&args.out)?;
    for doc in &docs.documents {
        let (p, cluster) = encoder.infer_document(doc)?;
        let line = serde_json::to_string(&Prediction {
            id: doc.id.clone(),
            cluster,
            distribution: Some(p.into_vec()),
        })?;
        writeln!(out, "{line}").map_err(|e| Error::io(&args.out, e))?;
    }
    out.flush().map_err(|e| Error::io(&args.out, e))?;
    println!("infer: {} documents -> {}", docs.len(), args.out.display());
    Ok(())
}

/// Reads predictions as JSONL (`Prediction` per line) or as
/// `doc_id<TAB>cluster` lines, whichever the first line looks like.
pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = read_text(path)?;
    let jsonl = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.trim_start().starts_with('{'));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        if jsonl {
            out.push(serde_json::from_str(line).map_err(|e| err(e.to_string()))?);
        } else {
            let (id, cluster) = line
                .split_once('\t')
                .ok_or_else(|| err("expected doc_id<TAB>cluster".into()))?;
            let cluster = cluster
                .trim()
                .parse()
                .map_err(|e| err(format!("bad cluster {cluster:?}: {e}")))?;
            out.push(Prediction {
                id: id.to_string(),
                cluster,
                distribution: None,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::Empty(format!(
            "{} has no predictions",
            path.display()
        )));
    }
    Ok(out)
}

pub struct EvalArgs {
    pub predictions: PathBuf,
    pub gold: PathBuf,
    pub num_clusters: Option<usize>,
    pub out: PathBuf,
}

/// Scores predictions against gold labels; writes `report.json` and
/// `report.txt`. The Davies-Bouldin index needs a distribution for every
/// document.
pub fn cmd_eval(args: &EvalArgs) -> Result<eval::ClusteringReport> {
    require_file(&args.predictions, "predictions")?;
    require_file(&args.gold, "gold labels")?;
    let predictions = read_predictions(&args.predictions)?;
    let labels: HashMap<String, i64> = load_gold_labels(&args.gold)?;
    let gold = predictions
        .iter()
        .map(|p| {
            labels
                .get(&p.id)
                .copied()
                .ok_or_else(|| Error::MissingLabel(p.id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let clusters: Vec<usize> = predictions.iter().map(|p| p.cluster).collect();
    let distributions: Option<Vec<Vec<f64>>> =
        predictions.iter().map(|p| p.distribution.clone()).collect();
    let report = eval::report(
        &gold,
        &clusters,
        distributions.as_deref(),
        args.num_clusters,
    )?;
    create_dir(&args.out)?;
    write_text(
        &args.out.join("report.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    let table = report.to_table();
    write_text(&args.out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(report)
}

/// Prints the worst relative error; exit code 2 when above tolerance.
pub fn cmd_gradcheck(spec: &GradCheckSpec, out: Option<&Path>) -> Result<i32> {
    let report = whole_model_gradcheck(spec)?;
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            create_dir(dir)?;
        }
        write_text(path, &serde_json::to_string_pretty(&report)?)?;
    }
    println!(
        "gradcheck: {} cases ({} redrawn), max relative error {:.3e}, tolerance {:.0e}",
        report.cases.len(),
        report.rejected,
        report.max_rel_error(),
        report.tolerance
    );
    if report.passed() {
        println!("gradcheck: PASS");
        Ok(EXIT_OK)
    } else {
        if let Some(w) = report.worst() {
            println!(
                "gradcheck: FAIL worst tensor {} (analytic {:e}, numeric {:e})",
                w.worst_tensor, w.analytic, w.numeric
            );
        }
        Ok(EXIT_NUMERICAL)
    }
}
