//! Neural text clustering with a siamese bidirectional LSTM.
//!
//! Sentence pairs are pseudo-labeled from corpus structure (same paragraph or
//! adjacent sentences are positive, distant sentences negative). A shared
//! encoder maps each sentence to a softmax distribution over categories; the
//! cosine of the two distributions is regressed onto the pseudo label. At
//! inference a document's cluster is the argmax of its averaged sentence
//! distributions.
//!
//! Modules:
//! - [`corpus`]: loading, tokenization, vocabularies, embeddings, synthetic corpora
//! - [`pairing`]: pseudo-labeled pair construction
//! - [`diffcore`]: tensors, primitives with hand-written backward rules, optimizers
//! - [`encoder`]: the siamese BiLSTM model
//! - [`trainer`]: training loop, history, checkpoints
//! - [`eval`]: Hungarian assignment and clustering metrics
//! - [`cli`]: run configuration and command implementations

pub mod cli;
pub mod corpus;
pub mod diffcore;
pub mod encoder;
pub mod eval;
pub mod pairing;
pub mod trainer;

mod error;

pub use error::{Error, Result};

/// Deterministic RNG used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Seeded RNG constructor.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
