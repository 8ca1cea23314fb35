//! Pinned synthetic recovery experiments.

use textclust::corpus::{generate_synthetic, random_embeddings, EncodedCorpus, SyntheticSpec};
use textclust::encoder::{Encoder, EncoderConfig};
use textclust::pairing::{
    build_training_set, label_noise_rate, NoiseReport, PairSamplerConfig, SamplingMode,
};
use textclust::trainer::{evaluate_checkpoint, train, OptimizerKind, TrainConfig, TrainHistory};

pub struct Setup {
    pub num_topics: usize,
    pub docs_per_topic: usize,
    pub purity: f64,
    pub words_per_topic: usize,
    pub num_pairs: usize,
    pub pos_ratio: f64,
    pub mode: SamplingMode,
    pub embedding_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub held_out: usize,
}

impl Setup {
    /// Four planted topics, purity 0.8.
    pub fn four_topics() -> Self {
        Self {
            num_topics: 4,
            docs_per_topic: 50,
            purity: 0.8,
            words_per_topic: 20,
            num_pairs: 5000,
            pos_ratio: 0.5,
            mode: SamplingMode::Paragraph,
            embedding_dim: 32,
            hidden: 32,
            layers: 1,
            learning_rate: 1e-3,
            l2: 1e-4,
            epochs: 20,
            held_out: 100,
        }
    }

    /// Two balanced topics; paragraph negatives are half mislabeled.
    pub fn two_topics() -> Self {
        Self {
            num_topics: 2,
            docs_per_topic: 100,
            ..Self::four_topics()
        }
    }
}

pub struct Outcome {
    pub accuracy: f64,
    pub report: textclust::eval::ClusteringReport,
    pub noise: NoiseReport,
    pub history: TrainHistory,
}

/// Splits the synthetic corpus into training documents and a held-out
/// tail of `held_out` documents (balanced, since labels cycle by index).
pub fn split(corpus: EncodedCorpus, held_out: usize) -> (EncodedCorpus, EncodedCorpus) {
    let n = corpus.len();
    corpus.partition(|i, _| i < n - held_out)
}

/// One seeded run. Sub-seeds follow the command-line convention: corpus
/// `seed`, pairs `seed + 1`, init `seed + 2`, embeddings `seed + 3`,
/// shuffles `seed + 4`.
pub fn run(setup: &Setup, seed: u64) -> Outcome {
    let spec = SyntheticSpec {
        num_topics: setup.num_topics,
        words_per_topic: setup.words_per_topic,
        topic_purity: setup.purity,
        docs_per_topic: setup.docs_per_topic,
        paragraphs_per_doc: 2,
        sentences_per_paragraph: 3,
        tokens_per_sentence: 10,
        seed,
    };
    let (corpus, vocab) = generate_synthetic(&spec).unwrap();
    let (train_docs, test_docs) = split(corpus, setup.held_out);
    let pairs = build_training_set(
        &train_docs,
        &PairSamplerConfig {
            mode: setup.mode,
            pos_ratio: setup.pos_ratio,
            min_negative_distance: 100,
            num_instances: setup.num_pairs,
            seed: seed.wrapping_add(1),
        },
    )
    .unwrap();
    let noise = label_noise_rate(&pairs, &train_docs).unwrap();

    let mut cfg = EncoderConfig::new(vocab.len(), setup.num_topics);
    cfg.embedding_dim = setup.embedding_dim;
    cfg.hidden_size = setup.hidden;
    cfg.num_layers = setup.layers;
    cfg.init_seed = seed.wrapping_add(2);
    let table = random_embeddings(vocab.len(), setup.embedding_dim, seed.wrapping_add(3));
    let mut encoder = Encoder::new(cfg, Some(table)).unwrap();

    let mut tc = TrainConfig::new(setup.epochs, seed.wrapping_add(4));
    tc.optimizer = OptimizerKind::Adam;
    tc.learning_rate = setup.learning_rate;
    tc.l2 = setup.l2;
    let history = train(&mut encoder, &pairs, &tc, Some(&test_docs)).unwrap();
    let report = evaluate_checkpoint(&encoder, &test_docs).unwrap();
    Outcome {
        accuracy: report.accuracy,
        report,
        noise,
        history,
    }
}
