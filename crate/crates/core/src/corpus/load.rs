use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Document, Paragraph, RawCorpus};
use crate::{Error, Result};

/// On-disk corpus layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// One sentence per line; a blank line ends a paragraph, two consecutive
    /// blank lines end a document.
    Lines,
    /// One JSON document per line:
    /// `{"id": str, "label": int?, "paragraphs": [[sentence, ...], ...]}`.
    Jsonl,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lines" => Ok(CorpusFormat::Lines),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::Config(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// Lowercases, splits punctuation into standalone tokens, then splits on
/// whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if ch.is_alphanumeric() {
            current.push(ch);
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(ch.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<RawCorpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, format)
}

pub fn parse_corpus(text: &str, format: CorpusFormat) -> Result<RawCorpus> {
    let corpus = match format {
        CorpusFormat::Lines => parse_lines(text),
        CorpusFormat::Jsonl => parse_jsonl(text)?,
    };
    if corpus.num_sentences() == 0 {
        return Err(Error::Empty("corpus contains no sentences".into()));
    }
    Ok(corpus)
}

fn parse_lines(text: &str) -> RawCorpus {
    let mut documents = Vec::new();
    let mut paragraphs: Vec<Paragraph<String>> = Vec::new();
    let mut paragraph: Paragraph<String> = Vec::new();
    let mut blank_run = 0usize;

    fn close_doc(documents: &mut Vec<Document<String>>, paragraphs: &mut Vec<Paragraph<String>>) {
        if !paragraphs.is_empty() {
            documents.push(Document {
                id: format!("d{}", documents.len()),
                gold_label: None,
                paragraphs: std::mem::take(paragraphs),
            });
        }
    }

    for line in text.lines() {
        if line.trim().is_empty() {
            blank_run += 1;
            continue;
        }
        if blank_run > 0 && !paragraph.is_empty() {
            paragraphs.push(std::mem::take(&mut paragraph));
        }
        if blank_run >= 2 {
            close_doc(&mut documents, &mut paragraphs);
        }
        blank_run = 0;
        paragraph.push(tokenize(line));
    }
    if !paragraph.is_empty() {
        paragraphs.push(paragraph);
    }
    close_doc(&mut documents, &mut paragraphs);
    Corpus { documents }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDocument {
    id: String,
    #[serde(default)]
    label: Option<i64>,
    paragraphs: Vec<Vec<String>>,
}

fn parse_jsonl(text: &str) -> Result<RawCorpus> {
    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonDocument = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("duplicate document id {:?}", rec.id),
            });
        }
        let paragraphs: Vec<Paragraph<String>> = rec
            .paragraphs
            .iter()
            .map(|p| {
                p.iter()
                    .map(|s| tokenize(s))
                    .filter(|s| !s.is_empty())
                    .collect::<Vec<_>>()
            })
            .filter(|p| !p.is_empty())
            .collect();
        documents.push(Document {
            id: rec.id,
            gold_label: rec.label,
            paragraphs,
        });
    }
    Ok(Corpus { documents })
}

/// Reads a `doc_id<TAB>label` file.
pub fn load_gold_labels(path: &Path) -> Result<HashMap<String, i64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected doc_id<TAB>label".into()))?;
        let label = label
            .trim()
            .parse::<i64>()
            .map_err(|e| parse_err(format!("bad label {label:?}: {e}")))?;
        labels.insert(id.to_string(), label);
    }
    Ok(labels)
}

/// Writes a raw corpus in `lines` format.
pub fn write_lines<W: Write>(corpus: &RawCorpus, mut out: W) -> std::io::Result<()> {
    for (d, doc) in corpus.documents.iter().enumerate() {
        if d > 0 {
            writeln!(out)?;
            writeln!(out)?;
        }
        for (p, para) in doc.paragraphs.iter().enumerate() {
            if p > 0 {
                writeln!(out)?;
            }
            for sentence in para {
                writeln!(out, "{}", sentence.join(" "))?;
            }
        }
    }
    Ok(())
}
