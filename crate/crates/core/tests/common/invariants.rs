//! Property checks for the invariants of every module. Each check runs a
//! deterministic proptest runner and returns the first counterexample as an
//! error message.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::Rng as _;

use textclust::corpus::{
    self, build_vocab, generate_synthetic, load_embeddings, save_embeddings, Corpus, Document,
    EmbeddingTable, EncodedCorpus, RawCorpus, SyntheticSpec, TokenId, Vocabulary, UNK_TOKEN,
};
use textclust::diffcore::ops::{cosine, se_cost, softmax};
use textclust::diffcore::{Optimizer, ParamSet, Tensor};
use textclust::encoder::{CategoryDistribution, Encoder, EncoderConfig};
use textclust::eval::{self, ContingencyTable};
use textclust::pairing::{
    build_training_set, label_noise_rate, PairInstance, PairSamplerConfig, SamplingMode,
    SentenceRef,
};
use textclust::trainer::{load_checkpoint, save_checkpoint, train, OptimizerKind, TrainConfig};

pub type Check = fn() -> Result<(), String>;

/// Every invariant check, by name.
pub const ALL: &[(&str, Check)] = &[
    ("encode_decode_round_trip", encode_decode_round_trip),
    ("synthetic_purity_converges", synthetic_purity_converges),
    (
        "embedding_save_load_idempotent",
        embedding_save_load_idempotent,
    ),
    (
        "paragraph_pairs_respect_paragraphs",
        paragraph_pairs_respect_paragraphs,
    ),
    (
        "distance_pairs_respect_distance",
        distance_pairs_respect_distance,
    ),
    ("negative_noise_is_one_over_k", negative_noise_is_one_over_k),
    ("softmax_is_a_distribution", softmax_is_a_distribution),
    (
        "cost_bounded_on_distributions",
        cost_bounded_on_distributions,
    ),
    ("branch_symmetry", branch_symmetry),
    ("encode_is_deterministic", encode_is_deterministic),
    (
        "reachable_similarity_and_loss_bounded",
        reachable_similarity_and_loss_bounded,
    ),
    (
        "category_permutation_equivariance",
        category_permutation_equivariance,
    ),
    ("document_average_is_convex", document_average_is_convex),
    ("training_is_deterministic", training_is_deterministic),
    (
        "decay_without_gradient_shrinks_norm",
        decay_without_gradient_shrinks_norm,
    ),
    ("checkpoint_resume_is_exact", checkpoint_resume_is_exact),
    (
        "hungarian_beats_every_permutation",
        hungarian_beats_every_permutation,
    ),
    (
        "hungarian_accuracy_is_maximal",
        hungarian_accuracy_is_maximal,
    ),
    (
        "agreement_scores_symmetric_and_relabel_invariant",
        agreement_scores_symmetric_and_relabel_invariant,
    ),
];

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    TestRunner::new_with_rng(config, rng)
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn fail(e: impl std::fmt::Display) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

// ---- corpus -----------------------------------------------------------

fn raw_corpus() -> impl Strategy<Value = RawCorpus> {
    let word = prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g", "h"]);
    let sentence = prop::collection::vec(word.prop_map(str::to_string), 1..6);
    let paragraph = prop::collection::vec(sentence, 1..4);
    let doc = prop::collection::vec(paragraph, 1..4);
    prop::collection::vec(doc, 1..6).prop_map(|docs| {
        Corpus::new(
            docs.into_iter()
                .enumerate()
                .map(|(i, paragraphs)| Document {
                    id: format!("d{i}"),
                    gold_label: None,
                    paragraphs,
                })
                .collect(),
        )
    })
}

pub fn encode_decode_round_trip() -> Result<(), String> {
    check(128, (raw_corpus(), 1usize..4), |(raw, min_count)| {
        let vocab = build_vocab(&raw, min_count, usize::MAX);
        let back = corpus::decode(&corpus::encode(&raw, &vocab, usize::MAX), &vocab);
        prop_assert_eq!(back.documents.len(), raw.documents.len());
        for (d0, d1) in raw.documents.iter().zip(&back.documents) {
            let (s0, s1): (Vec<_>, Vec<_>) = (d0.sentences().collect(), d1.sentences().collect());
            prop_assert_eq!(s0.len(), s1.len());
            for (a, b) in s0.iter().zip(&s1) {
                prop_assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(b.iter()) {
                    if vocab.get(x).is_some() {
                        prop_assert_eq!(x, y);
                    } else {
                        prop_assert_eq!(y.as_str(), UNK_TOKEN);
                    }
                }
            }
        }
        Ok(())
    })
}

pub fn synthetic_purity_converges() -> Result<(), String> {
    check(
        6,
        (2usize..6, 0.05f64..=1.0, any::<u64>()),
        |(k, purity, seed)| {
            let spec = SyntheticSpec {
                num_topics: k,
                words_per_topic: 7,
                topic_purity: purity,
                docs_per_topic: 2000 / k + 1,
                paragraphs_per_doc: 2,
                sentences_per_paragraph: 3,
                tokens_per_sentence: 10,
                seed,
            };
            let (c, _) = generate_synthetic(&spec).map_err(fail)?;
            let (mut in_topic, mut total) = (0usize, 0usize);
            for doc in &c.documents {
                let topic = doc.gold_label.expect("labeled") as usize;
                for s in doc.sentences() {
                    for &t in s {
                        total += 1;
                        in_topic += usize::from(spec.topic_of(t) == Some(topic));
                    }
                }
            }
            prop_assert!(total >= 100_000);
            let frac = in_topic as f64 / total as f64;
            prop_assert!(
                (frac - purity).abs() <= 0.02,
                "fraction {} vs purity {}",
                frac,
                purity
            );
            Ok(())
        },
    )
}

pub fn embedding_save_load_idempotent() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    check(
        48,
        (1usize..6, 1usize..5, any::<u64>()),
        |(extra, dim, seed)| {
            let mut tokens = vec![UNK_TOKEN.to_string()];
            tokens.extend((0..extra).map(|i| format!("w{i}")));
            let vocab = Vocabulary::from_tokens(tokens).map_err(fail)?;
            let mut rng = textclust::seeded_rng(seed);
            let data = (0..vocab.len() * dim)
                .map(|_| rng.gen_range(-1e3..1e3) * rng.gen::<f64>().powi(8))
                .collect();
            let table =
                EmbeddingTable::new(Tensor::matrix(vocab.len(), dim, data).map_err(fail)?, true)
                    .map_err(fail)?;
            let (p1, p2) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
            save_embeddings(&table, &vocab, &p1).map_err(fail)?;
            let (once, found) = load_embeddings(&p1, &vocab, dim, 1).map_err(fail)?;
            prop_assert_eq!(found, vocab.len());
            save_embeddings(&once, &vocab, &p2).map_err(fail)?;
            let (twice, _) = load_embeddings(&p2, &vocab, dim, 2).map_err(fail)?;
            prop_assert_eq!(&once.vectors, &table.vectors);
            prop_assert_eq!(&twice.vectors, &once.vectors);
            Ok(())
        },
    )
}

// ---- pairing ----------------------------------------------------------

/// Encoded corpus shapes: documents of paragraphs of sentence counts.
fn encoded_corpus() -> impl Strategy<Value = EncodedCorpus> {
    prop::collection::vec(prop::collection::vec(1usize..5, 1..4), 2..8).prop_map(|docs| {
        let mut next: TokenId = 1;
        Corpus::new(
            docs.into_iter()
                .enumerate()
                .map(|(i, paras)| Document {
                    id: format!("d{i}"),
                    gold_label: Some(i as i64 % 3),
                    paragraphs: paras
                        .into_iter()
                        .map(|n| {
                            (0..n)
                                .map(|_| {
                                    next += 1;
                                    vec![next]
                                })
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        )
    })
}

fn location(r: &SentenceRef) -> Result<textclust::pairing::SentenceLocation, TestCaseError> {
    r.location
        .ok_or_else(|| fail("sampled pair without provenance"))
}

pub fn paragraph_pairs_respect_paragraphs() -> Result<(), String> {
    let feasible = |c: &EncodedCorpus| {
        let paragraphs: Vec<usize> = c
            .documents
            .iter()
            .flat_map(|d| d.paragraphs.iter().map(Vec::len))
            .collect();
        paragraphs.len() >= 2 && paragraphs.iter().any(|&n| n >= 2)
    };
    let corpora = encoded_corpus().prop_filter("needs a positive and a negative", feasible);
    check(128, (corpora, any::<u64>()), |(c, seed)| {
        let config = PairSamplerConfig {
            mode: SamplingMode::Paragraph,
            pos_ratio: 0.5,
            min_negative_distance: 100,
            num_instances: 60,
            seed,
        };
        for p in build_training_set(&c, &config).map_err(fail)? {
            let (a, b) = (location(&p.source_a)?, location(&p.source_b)?);
            let same = a.doc == b.doc && a.paragraph == b.paragraph;
            prop_assert_eq!(same, p.label == 1, "{:?} {:?} label {}", a, b, p.label);
            prop_assert!(a.position != b.position);
            prop_assert_eq!(
                &c.documents[a.doc].paragraphs[a.paragraph][a.sentence],
                &p.seq_a
            );
        }
        Ok(())
    })
}

pub fn distance_pairs_respect_distance() -> Result<(), String> {
    let cases = (encoded_corpus(), 2usize..12, any::<u64>())
        .prop_filter("stream longer than the distance", |(c, d, _)| {
            c.num_sentences() > *d
        });
    check(128, cases, |(c, min_distance, seed)| {
        let config = PairSamplerConfig {
            mode: SamplingMode::Distance,
            pos_ratio: 0.3,
            min_negative_distance: min_distance,
            num_instances: 60,
            seed,
        };
        for p in build_training_set(&c, &config).map_err(fail)? {
            let (a, b) = (location(&p.source_a)?, location(&p.source_b)?);
            let gap = a.position.abs_diff(b.position);
            if p.label == 1 {
                prop_assert_eq!(gap, 1);
            } else {
                prop_assert!(gap >= min_distance, "gap {} below {}", gap, min_distance);
            }
        }
        Ok(())
    })
}

pub fn negative_noise_is_one_over_k() -> Result<(), String> {
    check(4, (2usize..6, any::<u64>()), |(k, seed)| {
        let spec = SyntheticSpec {
            num_topics: k,
            words_per_topic: 5,
            topic_purity: 0.8,
            docs_per_topic: 400,
            paragraphs_per_doc: 2,
            sentences_per_paragraph: 2,
            tokens_per_sentence: 3,
            seed,
        };
        let (c, _) = generate_synthetic(&spec).map_err(fail)?;
        let n = 20_000;
        let config = PairSamplerConfig {
            mode: SamplingMode::Paragraph,
            pos_ratio: 1.0 / n as f64,
            min_negative_distance: 100,
            num_instances: n,
            seed,
        };
        let pairs = build_training_set(&c, &config).map_err(fail)?;
        let noise = label_noise_rate(&pairs, &c).map_err(fail)?;
        let p = 1.0 / k as f64;
        let sigma = (p * (1.0 - p) / noise.negatives as f64).sqrt();
        prop_assert!(
            (noise.negative_noise - p).abs() <= 3.0 * sigma,
            "noise {} vs {} (sigma {})",
            noise.negative_noise,
            p,
            sigma
        );
        prop_assert_eq!(noise.positive_noise, 0.0);
        Ok(())
    })
}

// ---- diffcore ---------------------------------------------------------

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -50.0f64..50.0,
        -1e300f64..1e300,
        Just(f64::MAX),
        Just(f64::MIN),
        Just(0.0)
    ]
}

pub fn softmax_is_a_distribution() -> Result<(), String> {
    check(512, prop::collection::vec(finite(), 1..12), |x| {
        let p = softmax(&x);
        prop_assert_eq!(p.len(), x.len());
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        CategoryDistribution::new(p).map_err(fail)?;
        Ok(())
    })
}

pub fn cost_bounded_on_distributions() -> Result<(), String> {
    let logits = (1usize..10).prop_flat_map(|k| {
        (
            prop::collection::vec(finite(), k),
            prop::collection::vec(finite(), k),
            0u8..2,
        )
    });
    check(512, logits, |(x, y, label)| {
        let s = cosine(&softmax(&x), &softmax(&y)).map_err(fail)?;
        prop_assert!((0.0..=1.0).contains(&s), "similarity {}", s);
        let c = se_cost(s, label);
        prop_assert!((0.0..=1.0).contains(&c), "cost {}", c);
        Ok(())
    })
}

// ---- encoder ----------------------------------------------------------

#[derive(Debug, Clone)]
struct Model {
    config: EncoderConfig,
    a: Vec<TokenId>,
    b: Vec<TokenId>,
    label: u8,
}

fn model() -> impl Strategy<Value = Model> {
    let dims = (
        3usize..9,
        1usize..5,
        1usize..5,
        1usize..3,
        2usize..5,
        prop_oneof![Just(0.1), Just(1.0), Just(5.0)],
    );
    (dims, any::<u64>()).prop_flat_map(|((v, e, h, l, k, scale), seed)| {
        let ids = prop::collection::vec(0..v as TokenId, 1..7);
        (ids.clone(), ids, 0u8..2).prop_map(move |(a, b, label)| {
            let mut config = EncoderConfig::new(v, k);
            config.embedding_dim = e;
            config.hidden_size = h;
            config.num_layers = l;
            config.init_seed = seed;
            config.init_scale = scale;
            config.freeze_embeddings = false;
            Model {
                config,
                a,
                b,
                label,
            }
        })
    })
}

fn pair(a: &[TokenId], b: &[TokenId], label: u8) -> PairInstance {
    let source = |d: &str| SentenceRef {
        doc_id: d.into(),
        location: None,
    };
    PairInstance {
        seq_a: a.to_vec(),
        seq_b: b.to_vec(),
        label,
        source_a: source("a"),
        source_b: source("b"),
    }
}

pub fn branch_symmetry() -> Result<(), String> {
    check(256, model(), |m| {
        let enc = Encoder::new(m.config, None).map_err(fail)?;
        let ab = enc.pair_forward(&pair(&m.a, &m.b, m.label)).map_err(fail)?;
        let ba = enc.pair_forward(&pair(&m.b, &m.a, m.label)).map_err(fail)?;
        prop_assert_eq!(ab.similarity.to_bits(), ba.similarity.to_bits());
        prop_assert_eq!(ab.loss.to_bits(), ba.loss.to_bits());
        prop_assert_eq!(&ab.p_a, &ba.p_b);
        Ok(())
    })
}

pub fn encode_is_deterministic() -> Result<(), String> {
    check(128, model(), |m| {
        let first = Encoder::new(m.config.clone(), None).map_err(fail)?;
        let second = Encoder::new(m.config, None).map_err(fail)?;
        let p = first.encode(&m.a).map_err(fail)?;
        for q in [
            first.encode(&m.a).map_err(fail)?,
            second.encode(&m.a).map_err(fail)?,
        ] {
            prop_assert!(p
                .iter()
                .zip(q.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        Ok(())
    })
}

pub fn reachable_similarity_and_loss_bounded() -> Result<(), String> {
    let scaled = (model(), prop_oneof![Just(1.0), Just(30.0), Just(1e3)]);
    check(256, scaled, |(m, out_scale)| {
        let mut enc = Encoder::new(m.config, None).map_err(fail)?;
        for p in enc
            .params_mut()
            .iter_mut()
            .filter(|p| p.name.starts_with("out."))
        {
            p.value.data_mut().iter_mut().for_each(|v| *v *= out_scale);
        }
        let out = enc.pair_forward(&pair(&m.a, &m.b, m.label)).map_err(fail)?;
        prop_assert!(
            (0.0..=1.0).contains(&out.similarity),
            "similarity {}",
            out.similarity
        );
        prop_assert!((0.0..=1.0).contains(&out.loss), "loss {}", out.loss);
        Ok(())
    })
}

pub fn category_permutation_equivariance() -> Result<(), String> {
    let cases = model().prop_flat_map(|m| {
        let k = m.config.num_categories;
        (Just(m), Just((0..k).collect::<Vec<_>>()).prop_shuffle())
    });
    check(256, cases, |(m, perm)| {
        let enc = Encoder::new(m.config.clone(), None).map_err(fail)?;
        let mut params: ParamSet = enc.params().clone();
        let k = m.config.num_categories;
        // New category j is old category perm[j].
        for name in ["out.w", "out.b"] {
            let p = params.get_mut(name).expect("output layer");
            let old = p.value.data().to_vec();
            for (i, v) in p.value.data_mut().iter_mut().enumerate() {
                let (row, col) = (i / k, i % k);
                *v = old[row * k + perm[col]];
            }
        }
        let permuted = Encoder::from_params(m.config, params).map_err(fail)?;
        let p = enc.encode(&m.a).map_err(fail)?;
        let q = permuted.encode(&m.a).map_err(fail)?;
        for j in 0..k {
            prop_assert!(
                (q[j] - p[perm[j]]).abs() <= 1e-15,
                "{:?} vs {:?} under {:?}",
                q,
                p,
                perm
            );
        }
        Ok(())
    })
}

pub fn document_average_is_convex() -> Result<(), String> {
    let docs = (
        model(),
        prop::collection::vec(prop::collection::vec(0u32..3, 1..5), 1..6),
    );
    check(128, docs, |(m, sentences)| {
        let enc = Encoder::new(m.config, None).map_err(fail)?;
        let doc = Document {
            id: "x".into(),
            gold_label: None,
            paragraphs: vec![sentences.clone()],
        };
        let (mean, cluster) = enc.infer_document(&doc).map_err(fail)?;
        let parts: Vec<CategoryDistribution> = sentences
            .iter()
            .map(|s| enc.encode(s))
            .collect::<Result<_, _>>()
            .map_err(fail)?;
        let checked = CategoryDistribution::new(mean.to_vec()).map_err(fail)?;
        prop_assert_eq!(checked.argmax(), cluster);
        for j in 0..mean.len() {
            let lo = parts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
            let hi = parts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(mean[j] >= lo - 1e-15 && mean[j] <= hi + 1e-15);
        }
        Ok(())
    })
}

// ---- trainer ----------------------------------------------------------

fn small_encoder(seed: u64) -> Encoder {
    let mut config = EncoderConfig::new(6, 3);
    config.embedding_dim = 3;
    config.hidden_size = 3;
    config.num_layers = 1 + (seed % 2) as usize;
    config.init_seed = seed;
    config.init_scale = 0.5;
    config.freeze_embeddings = seed.is_multiple_of(3);
    Encoder::new(config, None).expect("valid config")
}

fn pair_set() -> impl Strategy<Value = Vec<PairInstance>> {
    let ids = prop::collection::vec(0u32..6, 1..5);
    prop::collection::vec((ids.clone(), ids, 0u8..2), 3..12)
        .prop_map(|v| v.into_iter().map(|(a, b, l)| pair(&a, &b, l)).collect())
}

fn optimizer_kind() -> impl Strategy<Value = OptimizerKind> {
    prop_oneof![Just(OptimizerKind::Sgd), Just(OptimizerKind::Adam)]
}

fn train_config(kind: OptimizerKind, batch: usize, seed: u64) -> TrainConfig {
    let mut tc = TrainConfig::new(3, seed);
    tc.optimizer = kind;
    tc.learning_rate = 0.05;
    tc.batch_size = batch;
    tc.eval_every = Some(2);
    tc.track = vec![0];
    tc
}

pub fn training_is_deterministic() -> Result<(), String> {
    check(
        24,
        (pair_set(), optimizer_kind(), 1usize..5, any::<u64>()),
        |(pairs, kind, batch, seed)| {
            let tc = train_config(kind, batch, seed);
            let mut one = small_encoder(seed);
            let mut two = small_encoder(seed);
            let h1 = train(&mut one, &pairs, &tc, None).map_err(fail)?;
            let h2 = train(&mut two, &pairs, &tc, None).map_err(fail)?;
            prop_assert_eq!(h1, h2);
            prop_assert_eq!(one.params(), two.params());
            Ok(())
        },
    )
}

pub fn decay_without_gradient_shrinks_norm() -> Result<(), String> {
    let params = prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 1..8), 1..4)
        .prop_filter("some nonzero value", |ps| {
            ps.iter().flatten().any(|&v| v != 0.0)
        });
    let opt = prop_oneof![
        (1e-4f64..0.5, 1e-4f64..1.0).prop_map(|(lr, l2)| Optimizer::Sgd { lr, l2 }),
        (1e-4f64..0.5, 1e-4f64..1.0).prop_map(|(lr, l2)| Optimizer::adam(lr, l2)),
    ];
    check(256, (params, opt), |(values, opt)| {
        let mut set = ParamSet::new();
        for (i, v) in values.into_iter().enumerate() {
            set.insert(format!("p{i}"), Tensor::vector(v).map_err(fail)?)
                .map_err(fail)?;
        }
        let mut norm = set.value_norm();
        for _ in 0..5 {
            set.zero_grad();
            opt.step(&mut set);
            let next = set.value_norm();
            prop_assert!(next < norm, "{:?}: norm {} -> {}", opt, norm, next);
            norm = next;
        }
        Ok(())
    })
}

pub fn checkpoint_resume_is_exact() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("ckpt.json");
    let cases = (
        pair_set(),
        optimizer_kind(),
        1usize..4,
        any::<u64>(),
        0.0f64..1.0,
    );
    check(24, cases, |(pairs, kind, batch, seed, cut)| {
        let mut tc = train_config(kind, batch, seed);
        tc.track.clear();
        let total = (pairs.len().div_ceil(batch) * tc.epochs) as u64;
        let k = (cut * total as f64) as u64;

        let mut straight = small_encoder(seed);
        train(&mut straight, &pairs, &tc, None).map_err(fail)?;

        let mut first = small_encoder(seed);
        train(
            &mut first,
            &pairs,
            &TrainConfig {
                max_steps: Some(k),
                ..tc.clone()
            },
            None,
        )
        .map_err(fail)?;
        prop_assert_eq!(first.params().optimizer_step(), k);
        save_checkpoint(&path, &first).map_err(fail)?;
        let mut resumed = load_checkpoint(&path).map_err(fail)?;
        prop_assert_eq!(resumed.params(), first.params());
        train(&mut resumed, &pairs, &tc, None).map_err(fail)?;
        prop_assert_eq!(resumed.params(), straight.params());
        Ok(())
    })
}

// ---- eval -------------------------------------------------------------

fn count_table() -> impl Strategy<Value = Vec<Vec<u64>>> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(0u64..6, c), r)
            .prop_filter("nonempty rows", |t| {
                t.iter().all(|row| row.iter().sum::<u64>() > 0)
            })
    })
}

fn table(counts: Vec<Vec<u64>>) -> ContingencyTable {
    let labels = (0..counts.len() as i64).collect();
    ContingencyTable::from_counts(labels, counts).expect("valid table")
}

/// Mapped total of cluster `c` → label `m[c]`.
fn score(t: &ContingencyTable, m: &[Option<usize>]) -> u64 {
    m.iter()
        .enumerate()
        .filter_map(|(c, l)| l.map(|l| t.get(l, c)))
        .sum()
}

/// A random injective cluster → label mapping.
fn random_injection(labels: usize, clusters: usize, seed: u64) -> Vec<Option<usize>> {
    use rand::seq::SliceRandom;
    let mut rng = textclust::seeded_rng(seed);
    let mut slots: Vec<Option<usize>> = (0..labels).map(Some).collect();
    slots.resize(labels.max(clusters), None);
    slots.shuffle(&mut rng);
    slots.truncate(clusters);
    slots
}

pub fn hungarian_beats_every_permutation() -> Result<(), String> {
    check(256, (count_table(), any::<u64>()), |(counts, seed)| {
        let t = table(counts);
        let m = eval::hungarian_assign(&t);
        prop_assert_eq!(m.len(), t.num_clusters());
        let used: Vec<usize> = m.iter().flatten().copied().collect();
        let mut dedup = used.clone();
        dedup.sort_unstable();
        dedup.dedup();
        prop_assert_eq!(dedup.len(), used.len(), "mapping not injective: {:?}", m);
        prop_assert_eq!(
            used.len(),
            t.num_labels().min(t.num_clusters()),
            "mapping not total: {:?}",
            m
        );
        for s in 0..20 {
            let other = random_injection(t.num_labels(), t.num_clusters(), seed.wrapping_add(s));
            prop_assert!(score(&t, &m) >= score(&t, &other));
        }
        Ok(())
    })
}

pub fn hungarian_accuracy_is_maximal() -> Result<(), String> {
    check(256, (count_table(), any::<u64>()), |(counts, seed)| {
        let t = table(counts);
        let best = eval::accuracy_and_fscores(&t, &eval::hungarian_assign(&t)).accuracy;
        for s in 0..20 {
            let other = random_injection(t.num_labels(), t.num_clusters(), seed.wrapping_add(s));
            prop_assert!(best >= eval::accuracy_and_fscores(&t, &other).accuracy);
        }
        Ok(())
    })
}

pub fn agreement_scores_symmetric_and_relabel_invariant() -> Result<(), String> {
    let cases = (
        prop::collection::vec((0usize..4, 0usize..5), 1..30),
        any::<u64>(),
    );
    check(256, cases, |(pairs, seed)| {
        use rand::seq::SliceRandom;
        let u: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let v: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let mut rng = textclust::seeded_rng(seed);
        let mut pu: Vec<usize> = (0..4).collect();
        let mut pv: Vec<usize> = (0..5).collect();
        pu.shuffle(&mut rng);
        pv.shuffle(&mut rng);
        let scores = |a: &[usize], b: &[usize]| {
            let gold: Vec<i64> = a.iter().map(|&x| x as i64).collect();
            let t = ContingencyTable::from_assignments(&gold, b, None).expect("valid");
            [eval::ari(&t), eval::nmi(&t), eval::ami(&t)]
        };
        let base = scores(&u, &v);
        let swapped = scores(&v, &u);
        let u2: Vec<usize> = u.iter().map(|&x| pu[x]).collect();
        let v2: Vec<usize> = v.iter().map(|&x| pv[x]).collect();
        let relabeled = scores(&u2, &v2);
        for i in 0..3 {
            prop_assert!(
                (base[i] - swapped[i]).abs() <= 1e-12,
                "{:?} vs {:?}",
                base,
                swapped
            );
            prop_assert!(
                (base[i] - relabeled[i]).abs() <= 1e-12,
                "{:?} vs {:?}",
                base,
                relabeled
            );
        }
        Ok(())
    })
}
