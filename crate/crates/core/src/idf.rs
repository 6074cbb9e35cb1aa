//! Smoothed inverse document frequency over a reference corpus.
//!
//! With `M` reference sentences and `df(w)` the number of sentences that
//! contain `w` at least once:
//!
//! ```text
//! weight(w)     = ln((M + 1) / (df(w) + 1))
//! unseen_weight = ln(M + 1)
//! ```
//!
//! Weights therefore lie in `[0, ln(M + 1)]`, a piece present in every
//! sentence weighs exactly 0 and an unseen piece gets the maximum.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::TokenSequence;

#[derive(Debug, Error, PartialEq)]
pub enum IdfError {
    #[error("idf corpus is empty")]
    EmptyCorpus,
    #[error("malformed idf file at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    weights: BTreeMap<String, f64>,
    corpus_size: usize,
    unseen_weight: f64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    corpus_size: usize,
    unseen_weight: f64,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    piece: String,
    weight: f64,
}

/// Builds the table from reference sentences.
pub fn build_idf<'a, I>(references: I) -> Result<IdfTable, IdfError>
where
    I: IntoIterator<Item = &'a TokenSequence>,
{
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    let mut m = 0usize;
    for sentence in references {
        m += 1;
        let unique: HashSet<&str> = sentence.pieces().iter().map(String::as_str).collect();
        for p in unique {
            *df.entry(p).or_default() += 1;
        }
    }
    if m == 0 {
        return Err(IdfError::EmptyCorpus);
    }
    let total = (m + 1) as f64;
    let weights = df
        .into_iter()
        .map(|(p, d)| (p.to_string(), (total / (d + 1) as f64).ln()))
        .collect();
    Ok(IdfTable {
        weights,
        corpus_size: m,
        unseen_weight: total.ln(),
    })
}

impl IdfTable {
    pub fn weight(&self, piece: &str) -> f64 {
        self.weights.get(piece).copied().unwrap_or(self.unseen_weight)
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn unseen_weight(&self) -> f64 {
        self.unseen_weight
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Header line `{"corpus_size","unseen_weight"}` followed by one
    /// `{"piece","weight"}` line per piece, sorted by piece.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), IdfError> {
        let io = |e: std::io::Error| IdfError::Io(e.to_string());
        let header = Header {
            corpus_size: self.corpus_size,
            unseen_weight: self.unseen_weight,
        };
        writeln!(w, "{}", serde_json::to_string(&header).expect("plain struct")).map_err(io)?;
        for (piece, weight) in &self.weights {
            let e = Entry {
                piece: piece.clone(),
                weight: *weight,
            };
            writeln!(w, "{}", serde_json::to_string(&e).expect("plain struct")).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, IdfError> {
        let mut lines = r.lines().enumerate();
        let parse = |line: usize, message: String| IdfError::Parse {
            line: line + 1,
            message,
        };
        let header: Header = loop {
            let Some((n, line)) = lines.next() else {
                return Err(parse(0, "missing header".into()));
            };
            let line = line.map_err(|e| IdfError::Io(e.to_string()))?;
            if !line.trim().is_empty() {
                break serde_json::from_str(&line).map_err(|e| parse(n, e.to_string()))?;
            }
        };
        if header.corpus_size == 0 {
            return Err(IdfError::EmptyCorpus);
        }
        let mut weights = BTreeMap::new();
        for (n, line) in lines {
            let line = line.map_err(|e| IdfError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let e: Entry = serde_json::from_str(&line).map_err(|e| parse(n, e.to_string()))?;
            if !(e.weight >= 0.0) {
                return Err(parse(n, format!("negative weight for {:?}", e.piece)));
            }
            if weights.insert(e.piece.clone(), e.weight).is_some() {
                return Err(parse(n, format!("duplicate piece {:?}", e.piece)));
            }
        }
        Ok(Self {
            weights,
            corpus_size: header.corpus_size,
            unseen_weight: header.unseen_weight,
        })
    }
}

/// Which corpora feed the reference-side and candidate-side tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdfVariant {
    /// Reference idf from the segment-level references, shared by both sides.
    Small,
    /// Same as `Small` but the caller passes a larger reference corpus.
    Large,
    /// Reference table as above; candidate table built from the candidates.
    Separate,
}

/// Reference-side and candidate-side tables used for recall and precision.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfPair {
    pub reference: IdfTable,
    pub candidate: IdfTable,
}

impl IdfPair {
    pub fn shared(table: IdfTable) -> Self {
        Self {
            reference: table.clone(),
            candidate: table,
        }
    }
}

pub fn build_idf_variant(
    references: &[TokenSequence],
    candidates: &[TokenSequence],
    variant: IdfVariant,
) -> Result<IdfPair, IdfError> {
    let reference = build_idf(references)?;
    match variant {
        IdfVariant::Small | IdfVariant::Large => Ok(IdfPair::shared(reference)),
        IdfVariant::Separate => Ok(IdfPair {
            reference,
            candidate: build_idf(candidates)?,
        }),
    }
}
