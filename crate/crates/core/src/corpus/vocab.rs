use std::collections::HashMap;
use std::path::Path;

use super::{RawCorpus, TokenId};
use crate::{Error, Result};

pub const UNK_TOKEN: &str = "<unk>";
pub const UNK_ID: TokenId = 0;

/// Token/id bijection with UNK fixed at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.first().map(String::as_str) != Some(UNK_TOKEN) {
            return Err(Error::Config(format!(
                "vocabulary must start with {UNK_TOKEN}"
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id of `token`, or UNK.
    pub fn id(&self, token: &str) -> TokenId {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn get(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Writes one token per line in id order.
pub fn save_vocab(vocab: &Vocabulary, path: &Path) -> Result<()> {
    let mut text = vocab.tokens().join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_vocab(path: &Path) -> Result<Vocabulary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Vocabulary::from_tokens(text.lines().map(str::to_string).collect())
}

/// Builds a vocabulary ordered by frequency (descending), ties broken
/// lexicographically. Tokens seen fewer than `min_count` times are left out
/// (they encode to UNK). `max_size` counts UNK.
pub fn build_vocab(corpus: &RawCorpus, min_count: usize, max_size: usize) -> Vocabulary {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in &corpus.documents {
        for token in doc.sentences().flatten() {
            *counts.entry(token.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count && t != UNK_TOKEN)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut tokens = vec![UNK_TOKEN.to_string()];
    tokens.extend(
        ranked
            .into_iter()
            .take(max_size.saturating_sub(1))
            .map(|(t, _)| t.to_string()),
    );
    Vocabulary::from_tokens(tokens).expect("tokens are distinct and start with UNK")
}
