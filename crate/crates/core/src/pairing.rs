//! Pseudo-labeled sentence pairs.
//!
//! Paragraph mode: a positive pair is two distinct sentences of one paragraph,
//! a negative pair one sentence from each of two distinct paragraphs.
//! Distance mode treats the corpus as one sentence stream in its original
//! order: positives are adjacent sentences, negatives are at least
//! `min_negative_distance` positions apart.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedCorpus, TokenId};
use crate::{seeded_rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Paragraph,
    Distance,
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paragraph" => Ok(SamplingMode::Paragraph),
            "distance" => Ok(SamplingMode::Distance),
            other => Err(Error::Config(format!("unknown sampling mode {other:?}"))),
        }
    }
}

/// Where a sentence sits in the corpus it was sampled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceLocation {
    pub doc: usize,
    /// Paragraph index within the document.
    pub paragraph: usize,
    /// Sentence index within the paragraph.
    pub sentence: usize,
    /// Index in the corpus-wide sentence stream.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRef {
    pub doc_id: String,
    /// Unknown for pairs replayed from a dump.
    pub location: Option<SentenceLocation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairInstance {
    pub seq_a: Vec<TokenId>,
    pub seq_b: Vec<TokenId>,
    /// 1 = assumed same category, 0 = assumed different.
    pub label: u8,
    pub source_a: SentenceRef,
    pub source_b: SentenceRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSamplerConfig {
    pub mode: SamplingMode,
    pub pos_ratio: f64,
    #[serde(default = "default_min_distance")]
    pub min_negative_distance: usize,
    pub num_instances: usize,
    pub seed: u64,
}

fn default_min_distance() -> usize {
    100
}

impl PairSamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pos_ratio > 0.0 && self.pos_ratio < 1.0) {
            return Err(Error::Config(format!(
                "pos_ratio must lie in (0, 1), got {}",
                self.pos_ratio
            )));
        }
        if self.min_negative_distance < 2 {
            return Err(Error::Config(
                "min_negative_distance must be at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn num_positives(&self) -> usize {
        (self.pos_ratio * self.num_instances as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy)]
struct ParagraphSpan {
    start: usize,
    len: usize,
}

/// Sentence and paragraph index over an encoded corpus.
pub struct PairSampler<'a> {
    corpus: &'a EncodedCorpus,
    sentences: Vec<SentenceLocation>,
    paragraphs: Vec<ParagraphSpan>,
    /// Paragraphs with at least two sentences.
    eligible: Vec<usize>,
}

impl<'a> PairSampler<'a> {
    pub fn new(corpus: &'a EncodedCorpus) -> Self {
        let mut sentences = Vec::new();
        let mut paragraphs = Vec::new();
        for (d, doc) in corpus.documents.iter().enumerate() {
            for (p, para) in doc.paragraphs.iter().enumerate() {
                let start = sentences.len();
                for s in 0..para.len() {
                    sentences.push(SentenceLocation {
                        doc: d,
                        paragraph: p,
                        sentence: s,
                        position: start + s,
                    });
                }
                if !para.is_empty() {
                    paragraphs.push(ParagraphSpan {
                        start,
                        len: para.len(),
                    });
                }
            }
        }
        let eligible = paragraphs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.len >= 2)
            .map(|(i, _)| i)
            .collect();
        PairSampler {
            corpus,
            sentences,
            paragraphs,
            eligible,
        }
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }

    fn sentence_ref(&self, position: usize) -> (Vec<TokenId>, SentenceRef) {
        let loc = self.sentences[position];
        let doc = &self.corpus.documents[loc.doc];
        (
            doc.paragraphs[loc.paragraph][loc.sentence].clone(),
            SentenceRef {
                doc_id: doc.id.clone(),
                location: Some(loc),
            },
        )
    }

    fn pair(&self, a: usize, b: usize, label: u8) -> PairInstance {
        let (seq_a, source_a) = self.sentence_ref(a);
        let (seq_b, source_b) = self.sentence_ref(b);
        PairInstance {
            seq_a,
            seq_b,
            label,
            source_a,
            source_b,
        }
    }

    pub fn sample_positive<R: Rng>(&self, mode: SamplingMode, rng: &mut R) -> Result<PairInstance> {
        match mode {
            SamplingMode::Paragraph => {
                let &p = self.eligible.choose(rng).ok_or_else(|| {
                    Error::Infeasible("no paragraph has two or more sentences".into())
                })?;
                let span = self.paragraphs[p];
                let i = rng.gen_range(0..span.len);
                let mut j = rng.gen_range(0..span.len - 1);
                if j >= i {
                    j += 1;
                }
                Ok(self.pair(span.start + i, span.start + j, 1))
            }
            SamplingMode::Distance => {
                let n = self.sentences.len();
                if n < 2 {
                    return Err(Error::Infeasible(
                        "distance mode needs at least two sentences".into(),
                    ));
                }
                let i = rng.gen_range(0..n - 1);
                Ok(self.pair(i, i + 1, 1))
            }
        }
    }

    pub fn sample_negative<R: Rng>(
        &self,
        mode: SamplingMode,
        min_distance: usize,
        rng: &mut R,
    ) -> Result<PairInstance> {
        match mode {
            SamplingMode::Paragraph => {
                let n = self.paragraphs.len();
                if n < 2 {
                    return Err(Error::Infeasible(
                        "paragraph mode negatives need at least two paragraphs".into(),
                    ));
                }
                let p = rng.gen_range(0..n);
                let mut q = rng.gen_range(0..n - 1);
                if q >= p {
                    q += 1;
                }
                let (sp, sq) = (self.paragraphs[p], self.paragraphs[q]);
                let a = sp.start + rng.gen_range(0..sp.len);
                let b = sq.start + rng.gen_range(0..sq.len);
                Ok(self.pair(a, b, 0))
            }
            SamplingMode::Distance => {
                let (i, j) = sample_distant_pair(self.sentences.len(), min_distance, rng)?;
                Ok(if rng.gen_bool(0.5) {
                    self.pair(i, j, 0)
                } else {
                    self.pair(j, i, 0)
                })
            }
        }
    }
}

/// Uniform over unordered pairs `i < j < n` with `j - i >= min_distance`.
fn sample_distant_pair<R: Rng>(
    n: usize,
    min_distance: usize,
    rng: &mut R,
) -> Result<(usize, usize)> {
    if min_distance == 0 || min_distance >= n {
        return Err(Error::Infeasible(format!(
            "no sentence pair at distance >= {min_distance} in a stream of {n}"
        )));
    }
    // Start i admits m - i partners where m = n - min_distance, so the pairs
    // before start i number S(i) = i*m - i(i-1)/2.
    let m = (n - min_distance) as u128;
    let total = m * (m + 1) / 2;
    let r = rng.gen_range(0..total);
    let before = |i: u128| i * m - i * (i.saturating_sub(1)) / 2;
    let (mut lo, mut hi) = (0u128, m - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if before(mid) <= r {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let i = lo as usize;
    let j = i + min_distance + (r - before(lo)) as usize;
    Ok((i, j))
}

/// Samples `num_instances` pairs, `round(pos_ratio * num_instances)` of them
/// positive, in shuffled order. Sampling is with replacement.
pub fn build_training_set(
    corpus: &EncodedCorpus,
    config: &PairSamplerConfig,
) -> Result<Vec<PairInstance>> {
    config.validate()?;
    let sampler = PairSampler::new(corpus);
    let mut rng = seeded_rng(config.seed);
    let n_pos = config.num_positives();
    let mut pairs = Vec::with_capacity(config.num_instances);
    for _ in 0..n_pos {
        pairs.push(sampler.sample_positive(config.mode, &mut rng)?);
    }
    for _ in n_pos..config.num_instances {
        pairs.push(sampler.sample_negative(config.mode, config.min_negative_distance, &mut rng)?);
    }
    pairs.shuffle(&mut rng);
    Ok(pairs)
}

/// Fraction of pseudo labels contradicted by gold labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    /// Positives whose sentences carry different gold labels.
    pub positive_noise: f64,
    /// Negatives whose sentences share a gold label.
    pub negative_noise: f64,
    pub positives: usize,
    pub negatives: usize,
}

pub fn label_noise_rate(instances: &[PairInstance], corpus: &EncodedCorpus) -> Result<NoiseReport> {
    let gold: HashMap<&str, Option<i64>> = corpus
        .documents
        .iter()
        .map(|d| (d.id.as_str(), d.gold_label))
        .collect();
    let label_of = |r: &SentenceRef| -> Result<i64> {
        gold.get(r.doc_id.as_str())
            .copied()
            .flatten()
            .ok_or_else(|| Error::MissingLabel(r.doc_id.clone()))
    };
    let (mut pos, mut neg, mut pos_bad, mut neg_bad) = (0usize, 0usize, 0usize, 0usize);
    for pair in instances {
        let same = label_of(&pair.source_a)? == label_of(&pair.source_b)?;
        if pair.label == 1 {
            pos += 1;
            pos_bad += usize::from(!same);
        } else {
            neg += 1;
            neg_bad += usize::from(same);
        }
    }
    let frac = |bad: usize, total: usize| {
        if total == 0 {
            0.0
        } else {
            bad as f64 / total as f64
        }
    };
    Ok(NoiseReport {
        positive_noise: frac(pos_bad, pos),
        negative_noise: frac(neg_bad, neg),
        positives: pos,
        negatives: neg,
    })
}

fn join_ids(ids: &[TokenId]) -> String {
    ids.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

/// Writes `label, doc_a, doc_b, ids_a, ids_b` tab-separated, one pair per line.
pub fn write_pairs_tsv<W: Write>(pairs: &[PairInstance], mut out: W) -> std::io::Result<()> {
    for p in pairs {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.label,
            p.source_a.doc_id,
            p.source_b.doc_id,
            join_ids(&p.seq_a),
            join_ids(&p.seq_b)
        )?;
    }
    Ok(())
}

/// Reads a pair dump back; sentence locations are not recorded in the dump.
pub fn read_pairs_tsv<R: BufRead>(input: R) -> Result<Vec<PairInstance>> {
    let mut pairs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(err(format!("expected 5 columns, got {}", cols.len())));
        }
        let label = match cols[0] {
            "0" => 0,
            "1" => 1,
            other => return Err(err(format!("label must be 0 or 1, got {other:?}"))),
        };
        let ids = |s: &str| -> Result<Vec<TokenId>> {
            let v = s
                .split(' ')
                .map(str::parse)
                .collect::<std::result::Result<Vec<TokenId>, _>>()
                .map_err(|e| err(format!("bad token id: {e}")))?;
            if v.is_empty() {
                return Err(err("empty sequence".into()));
            }
            Ok(v)
        };
        let source = |id: &str| SentenceRef {
            doc_id: id.to_string(),
            location: None,
        };
        pairs.push(PairInstance {
            seq_a: ids(cols[3])?,
            seq_b: ids(cols[4])?,
            label,
            source_a: source(cols[1]),
            source_b: source(cols[2]),
        });
    }
    Ok(pairs)
}
