//! Corpora, tokenization, vocabularies and word embeddings.
//!
//! A corpus is a list of documents, each a list of paragraphs, each a list of
//! sentences. Sentences hold raw tokens after loading ([`RawCorpus`]) and
//! token ids after [`encode`] ([`EncodedCorpus`]).

mod embeddings;
mod load;
mod synthetic;
mod vocab;

pub use embeddings::{load_embeddings, random_embeddings, save_embeddings, EmbeddingTable};
pub use load::{load_corpus, load_gold_labels, parse_corpus, tokenize, write_lines, CorpusFormat};
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use vocab::{build_vocab, load_vocab, save_vocab, Vocabulary, UNK_ID, UNK_TOKEN};

use serde::{Deserialize, Serialize};

pub type TokenId = u32;
pub type Sentence<T> = Vec<T>;
pub type Paragraph<T> = Vec<Sentence<T>>;

/// Default truncation length applied by [`encode`].
pub const DEFAULT_MAX_SENTENCE_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document<T> {
    pub id: String,
    pub gold_label: Option<i64>,
    pub paragraphs: Vec<Paragraph<T>>,
}

impl<T> Document<T> {
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence<T>> {
        self.paragraphs.iter().flatten()
    }

    pub fn num_sentences(&self) -> usize {
        self.paragraphs.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus<T> {
    pub documents: Vec<Document<T>>,
}

pub type RawCorpus = Corpus<String>;
pub type EncodedCorpus = Corpus<TokenId>;

impl<T> Corpus<T> {
    pub fn new(documents: Vec<Document<T>>) -> Self {
        Corpus { documents }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn num_sentences(&self) -> usize {
        self.documents.iter().map(Document::num_sentences).sum()
    }

    /// Gold labels of every document, or the id of the first unlabeled one.
    pub fn gold_labels(&self) -> Result<Vec<i64>, String> {
        self.documents
            .iter()
            .map(|d| d.gold_label.ok_or_else(|| d.id.clone()))
            .collect()
    }

    /// Attaches gold labels by document id; returns how many were matched.
    pub fn attach_labels(&mut self, labels: &std::collections::HashMap<String, i64>) -> usize {
        let mut matched = 0;
        for doc in &mut self.documents {
            if let Some(&l) = labels.get(&doc.id) {
                doc.gold_label = Some(l);
                matched += 1;
            }
        }
        matched
    }

    /// Splits documents by predicate into (matching, rest), preserving order.
    pub fn partition(self, mut pred: impl FnMut(usize, &Document<T>) -> bool) -> (Self, Self) {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, d) in self.documents.into_iter().enumerate() {
            if pred(i, &d) {
                a.push(d);
            } else {
                b.push(d);
            }
        }
        (Corpus::new(a), Corpus::new(b))
    }
}

/// Maps tokens to ids (unknown tokens to UNK) and truncates each sentence to
/// `max_len` tokens. Sentences that end up empty are dropped, as are
/// paragraphs with no sentences left.
pub fn encode(corpus: &RawCorpus, vocab: &Vocabulary, max_len: usize) -> EncodedCorpus {
    let documents = corpus
        .documents
        .iter()
        .map(|doc| Document {
            id: doc.id.clone(),
            gold_label: doc.gold_label,
            paragraphs: doc
                .paragraphs
                .iter()
                .map(|para| {
                    para.iter()
                        .filter(|s| !s.is_empty() && max_len > 0)
                        .map(|s| s.iter().take(max_len).map(|t| vocab.id(t)).collect())
                        .collect::<Vec<_>>()
                })
                .filter(|p: &Vec<Vec<TokenId>>| !p.is_empty())
                .collect(),
        })
        .collect();
    Corpus { documents }
}

/// Maps ids back to tokens.
pub fn decode(corpus: &EncodedCorpus, vocab: &Vocabulary) -> RawCorpus {
    let documents = corpus
        .documents
        .iter()
        .map(|doc| Document {
            id: doc.id.clone(),
            gold_label: doc.gold_label,
            paragraphs: doc
                .paragraphs
                .iter()
                .map(|para| {
                    para.iter()
                        .map(|s| s.iter().map(|&id| vocab.token(id).to_string()).collect())
                        .collect()
                })
                .collect(),
        })
        .collect();
    Corpus { documents }
}
