use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Document, EncodedCorpus, TokenId, Vocabulary, UNK_TOKEN};
use crate::{seeded_rng, Error, Result};

/// Planted-topic corpus parameters.
///
/// Each topic owns a disjoint lexicon of `words_per_topic` words. A token of a
/// document with topic `t` comes from lexicon `t` with probability
/// `topic_purity`, otherwise uniformly from the other topics' words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_topics: usize,
    pub words_per_topic: usize,
    pub topic_purity: f64,
    pub docs_per_topic: usize,
    pub paragraphs_per_doc: usize,
    pub sentences_per_paragraph: usize,
    pub tokens_per_sentence: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_topics", self.num_topics),
            ("words_per_topic", self.words_per_topic),
            ("docs_per_topic", self.docs_per_topic),
            ("paragraphs_per_doc", self.paragraphs_per_doc),
            ("sentences_per_paragraph", self.sentences_per_paragraph),
            ("tokens_per_sentence", self.tokens_per_sentence),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if !(self.topic_purity > 0.0 && self.topic_purity <= 1.0) {
            return Err(Error::Config(format!(
                "topic_purity must lie in (0, 1], got {}",
                self.topic_purity
            )));
        }
        Ok(())
    }

    /// Id of word `word` of topic `topic` in the generated vocabulary.
    pub fn token_id(&self, topic: usize, word: usize) -> TokenId {
        (1 + topic * self.words_per_topic + word) as TokenId
    }

    /// Topic whose lexicon contains `id`, if any.
    pub fn topic_of(&self, id: TokenId) -> Option<usize> {
        let id = id as usize;
        (id >= 1 && id <= self.num_topics * self.words_per_topic)
            .then(|| (id - 1) / self.words_per_topic)
    }
}

/// Generates `num_topics * docs_per_topic` labeled documents. Document `i`
/// has id `d{i}` and gold label `i % num_topics`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(EncodedCorpus, Vocabulary)> {
    spec.validate()?;
    let k = spec.num_topics;
    let w = spec.words_per_topic;

    let mut tokens = vec![UNK_TOKEN.to_string()];
    for t in 0..k {
        tokens.extend((0..w).map(|i| format!("t{t}w{i}")));
    }
    let vocab = Vocabulary::from_tokens(tokens)?;

    let mut rng = seeded_rng(spec.seed);
    let mut draw = |topic: usize| -> TokenId {
        if k == 1 || rng.gen_bool(spec.topic_purity) {
            spec.token_id(topic, rng.gen_range(0..w))
        } else {
            // Uniform over the (k - 1) * w words outside the own lexicon.
            let r = rng.gen_range(0..(k - 1) * w);
            let (mut other, word) = (r / w, r % w);
            if other >= topic {
                other += 1;
            }
            spec.token_id(other, word)
        }
    };

    let documents = (0..k * spec.docs_per_topic)
        .map(|i| {
            let topic = i % k;
            let paragraphs = (0..spec.paragraphs_per_doc)
                .map(|_| {
                    (0..spec.sentences_per_paragraph)
                        .map(|_| (0..spec.tokens_per_sentence).map(|_| draw(topic)).collect())
                        .collect()
                })
                .collect();
            Document {
                id: format!("d{i}"),
                gold_label: Some(topic as i64),
                paragraphs,
            }
        })
        .collect();
    Ok((Corpus::new(documents), vocab))
}
