use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;

use super::Vocabulary;
use crate::diffcore::Tensor;
use crate::{seeded_rng, Error, Result};

/// Word vectors aligned with a vocabulary: row `i` belongs to token id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub vectors: Tensor,
    pub frozen: bool,
}

impl EmbeddingTable {
    pub fn new(vectors: Tensor, frozen: bool) -> Result<Self> {
        if vectors.shape().len() != 2 {
            return Err(Error::Shape("embedding table must be a matrix".into()));
        }
        Ok(EmbeddingTable { vectors, frozen })
    }

    pub fn vocab_size(&self) -> usize {
        self.vectors.rows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn row(&self, id: usize) -> &[f64] {
        let d = self.dim();
        &self.vectors.data()[id * d..(id + 1) * d]
    }
}

/// Table with entries iid uniform(-0.1, 0.1), frozen.
pub fn random_embeddings(vocab_size: usize, dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = seeded_rng(seed);
    let data = (0..vocab_size * dim)
        .map(|_| rng.gen_range(-0.1..0.1))
        .collect();
    EmbeddingTable {
        vectors: Tensor::matrix(vocab_size, dim, data).expect("finite by construction"),
        frozen: true,
    }
}

/// Loads GloVe-style text vectors (`token v1 ... v_dim` per line) for the
/// tokens of `vocab`. Rows for tokens absent from the file keep their
/// uniform(-0.1, 0.1) initialization from `seed`. Returns the table and the
/// number of vocabulary tokens found.
pub fn load_embeddings(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<(EmbeddingTable, usize)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table = random_embeddings(vocab.len(), dim, seed);
    let mut seen = vec![false; vocab.len()];
    let mut matched = 0;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        // Tokens may contain spaces; the vector is always the last `dim` fields.
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < dim + 1 {
            return Err(parse_err(format!(
                "expected a token and {dim} values, got {} fields",
                fields.len()
            )));
        }
        let (token_parts, fields) = fields.split_at(fields.len() - dim);
        let token = token_parts.join(" ");
        let values = fields
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| parse_err(format!("expected {dim} finite values")))?;
        if let Some(id) = vocab.get(&token) {
            let id = id as usize;
            if !seen[id] {
                seen[id] = true;
                matched += 1;
                table.vectors.data_mut()[id * dim..(id + 1) * dim].copy_from_slice(&values);
            }
        }
    }
    Ok((table, matched))
}

/// Writes every row in GloVe text format with round-trip-exact numbers.
pub fn save_embeddings(table: &EmbeddingTable, vocab: &Vocabulary, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let write = |out: &mut std::io::BufWriter<std::fs::File>| -> std::io::Result<()> {
        for (id, token) in vocab.tokens().iter().enumerate() {
            write!(out, "{token}")?;
            for v in table.row(id) {
                write!(out, " {v:?}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}
