//! Greedy-matching similarity scores.
//!
//! For reference tokens `i` and candidate tokens `j` with unit embeddings the
//! similarity is the inner product `S[i][j]`. Recall scores each reference
//! token by its best candidate match, precision each candidate token by its
//! best reference match:
//!
//! ```text
//! R = Σ_i w_i · max_j S[i][j] / Σ_i w_i
//! P = Σ_j v_j · max_i S[i][j] / Σ_j v_j
//! F = 2PR / (P + R)
//! ```
//!
//! `w` are reference-side idf weights and `v` candidate-side idf weights (all
//! ones without idf). A rescaling baseline `b` maps each component `x` to
//! `(x - b) / (1 - b)`, with separate baselines for P, R and F.

use rayon::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{EmbeddedSentence, EmbeddingMatrix, LayerPolicy, UNIT_NORM_TOL};
use crate::idf::IdfPair;
use crate::matrix::Matrix;
use crate::rng::{substream, Domain};
use crate::tokenizer::{surviving_indices, FilterPolicy, TokenSequence};

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("embedding dimensions differ: {reference} vs {candidate}")]
    DimensionMismatch { reference: usize, candidate: usize },
    #[error("embeddings are not row-normalized")]
    NotNormalized,
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("every {side} token was removed by the filter policy")]
    EmptyAfterFilter { side: &'static str },
    #[error("{side} token weights sum to zero")]
    ZeroWeight { side: &'static str },
    #[error("token count {tokens} does not match {rows} similarity rows/columns")]
    ShapeMismatch { tokens: usize, rows: usize },
    #[error("score is already rescaled")]
    AlreadyRescaled,
    #[error("invalid rescaling baseline {0} (must be < 1)")]
    InvalidBaseline(f64),
    #[error("baseline pool needs at least 2 sentences, got {0}")]
    PoolTooSmall(usize),
    #[error("need at least one reference")]
    NoReferences,
    #[error("pair count must be at least 1")]
    NoPairs,
    #[error(transparent)]
    Embedding(#[from] crate::embeddings::EmbeddingError),
}

/// Reference tokens as rows, candidate tokens as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix(Matrix);

impl SimilarityMatrix {
    /// Wraps raw values, clamping every entry to `[-1, 1]`.
    pub fn from_matrix(m: Matrix) -> Self {
        Self(m.map(|v| v.clamp(-1.0, 1.0)))
    }

    pub fn values(&self) -> &Matrix {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    /// Swaps the roles of reference and candidate.
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }
}

fn check_normalized(m: &EmbeddingMatrix) -> Result<(), ScoreError> {
    if !m.is_normalized() {
        return Err(ScoreError::NotNormalized);
    }
    let unit = (0..m.rows()).all(|i| {
        let n: f64 = m.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        (n - 1.0).abs() <= UNIT_NORM_TOL
    });
    if unit {
        Ok(())
    } else {
        Err(ScoreError::NotNormalized)
    }
}

pub fn similarity_matrix(
    reference: &EmbeddingMatrix,
    candidate: &EmbeddingMatrix,
) -> Result<SimilarityMatrix, ScoreError> {
    if reference.dim() != candidate.dim() {
        return Err(ScoreError::DimensionMismatch {
            reference: reference.dim(),
            candidate: candidate.dim(),
        });
    }
    check_normalized(reference)?;
    check_normalized(candidate)?;
    let m = Matrix::from_fn(reference.rows(), candidate.rows(), |i, j| {
        reference
            .row(i)
            .iter()
            .zip(candidate.row(j))
            .map(|(a, b)| a * b)
            .sum()
    });
    Ok(SimilarityMatrix::from_matrix(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub rescaled: bool,
    /// Set when P + R = 0 and F was defined as 0.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub f1_undefined: bool,
}

impl ScoreTriple {
    /// Builds a raw triple, F being the harmonic mean of P and R.
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let sum = precision + recall;
        let (f1, f1_undefined) = if sum == 0.0 {
            (0.0, true)
        } else {
            (2.0 * precision * recall / sum, false)
        };
        Self {
            precision,
            recall,
            f1,
            rescaled: false,
            f1_undefined,
        }
    }
}

/// Empirical lower bound used for rescaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleBaseline {
    #[serde(rename = "b_P")]
    pub b_precision: f64,
    #[serde(rename = "b_R")]
    pub b_recall: f64,
    #[serde(rename = "b_F")]
    pub b_f1: f64,
    #[serde(rename = "samples")]
    pub sample_count: usize,
    pub provider: String,
}

impl RescaleBaseline {
    pub fn validate(&self) -> Result<(), ScoreError> {
        for b in [self.b_precision, self.b_recall, self.b_f1] {
            if !(b < 1.0) {
                return Err(ScoreError::InvalidBaseline(b));
            }
        }
        Ok(())
    }
}

/// Options for one scoring run.
#[derive(Debug, Clone, Default)]
pub struct ScoreConfig {
    pub idf: Option<IdfPair>,
    pub filter: FilterPolicy,
    pub layer: LayerPolicy,
    pub baseline: Option<RescaleBaseline>,
}

impl ScoreConfig {
    /// The same configuration without a baseline.
    pub fn raw(&self) -> Self {
        Self {
            baseline: None,
            ..self.clone()
        }
    }
}

/// Greedy P/R/F from a similarity matrix and explicit non-negative weights
/// (reference weights per row, candidate weights per column).
pub fn greedy_score_weighted(
    sim: &SimilarityMatrix,
    ref_weights: &[f64],
    cand_weights: &[f64],
) -> Result<ScoreTriple, ScoreError> {
    let (k, l) = (sim.rows(), sim.cols());
    if k == 0 || l == 0 {
        return Err(ScoreError::EmptySentence);
    }
    if ref_weights.len() != k {
        return Err(ScoreError::ShapeMismatch {
            tokens: ref_weights.len(),
            rows: k,
        });
    }
    if cand_weights.len() != l {
        return Err(ScoreError::ShapeMismatch {
            tokens: cand_weights.len(),
            rows: l,
        });
    }
    let ref_total: f64 = ref_weights.iter().sum();
    let cand_total: f64 = cand_weights.iter().sum();
    if ref_total <= 0.0 {
        return Err(ScoreError::ZeroWeight { side: "reference" });
    }
    if cand_total <= 0.0 {
        return Err(ScoreError::ZeroWeight { side: "candidate" });
    }
    let mut col_best = vec![f64::NEG_INFINITY; l];
    let mut recall = 0.0;
    for (i, w) in ref_weights.iter().enumerate() {
        let mut row_best = f64::NEG_INFINITY;
        for (j, best) in col_best.iter_mut().enumerate() {
            let s = sim.get(i, j);
            row_best = row_best.max(s);
            *best = best.max(s);
        }
        recall += w * row_best;
    }
    let precision: f64 = col_best.iter().zip(cand_weights).map(|(s, v)| s * v).sum();
    Ok(ScoreTriple::from_pr(precision / cand_total, recall / ref_total))
}

/// Full scoring of one pair: filtering, idf weighting and optional rescaling.
pub fn greedy_score(
    sim: &SimilarityMatrix,
    ref_tokens: &TokenSequence,
    cand_tokens: &TokenSequence,
    cfg: &ScoreConfig,
) -> Result<ScoreTriple, ScoreError> {
    if ref_tokens.is_empty() || cand_tokens.is_empty() {
        return Err(ScoreError::EmptySentence);
    }
    if ref_tokens.len() != sim.rows() {
        return Err(ScoreError::ShapeMismatch {
            tokens: ref_tokens.len(),
            rows: sim.rows(),
        });
    }
    if cand_tokens.len() != sim.cols() {
        return Err(ScoreError::ShapeMismatch {
            tokens: cand_tokens.len(),
            rows: sim.cols(),
        });
    }
    let rows = surviving_indices(ref_tokens, &cfg.filter);
    let cols = surviving_indices(cand_tokens, &cfg.filter);
    if rows.is_empty() {
        return Err(ScoreError::EmptyAfterFilter { side: "reference" });
    }
    if cols.is_empty() {
        return Err(ScoreError::EmptyAfterFilter { side: "candidate" });
    }
    let weights = |tokens: &TokenSequence, keep: &[usize], table: Option<&crate::IdfTable>| {
        keep.iter()
            .map(|&i| table.map_or(1.0, |t| t.weight(&tokens.pieces()[i])))
            .collect::<Vec<f64>>()
    };
    let rw = weights(ref_tokens, &rows, cfg.idf.as_ref().map(|p| &p.reference));
    let cw = weights(cand_tokens, &cols, cfg.idf.as_ref().map(|p| &p.candidate));
    let sub = SimilarityMatrix(sim.values().select(&rows, &cols));
    let triple = greedy_score_weighted(&sub, &rw, &cw)?;
    match &cfg.baseline {
        Some(b) => rescale(&triple, b),
        None => Ok(triple),
    }
}

pub fn rescale(t: &ScoreTriple, base: &RescaleBaseline) -> Result<ScoreTriple, ScoreError> {
    if t.rescaled {
        return Err(ScoreError::AlreadyRescaled);
    }
    base.validate()?;
    let map = |x: f64, b: f64| (x - b) / (1.0 - b);
    Ok(ScoreTriple {
        precision: map(t.precision, base.b_precision),
        recall: map(t.recall, base.b_recall),
        f1: map(t.f1, base.b_f1),
        rescaled: true,
        f1_undefined: t.f1_undefined,
    })
}

/// Scores an embedded candidate against an embedded reference.
pub fn score_pair(
    reference: &EmbeddedSentence,
    candidate: &EmbeddedSentence,
    cfg: &ScoreConfig,
) -> Result<ScoreTriple, ScoreError> {
    if reference.tokens.is_empty() || candidate.tokens.is_empty() {
        return Err(ScoreError::EmptySentence);
    }
    let sim = similarity_matrix(&reference.embeddings, &candidate.embeddings)?;
    greedy_score(&sim, &reference.tokens, &candidate.tokens, cfg)
}

/// Averages raw scores over `pairs` random ordered pairs of distinct pool
/// sentences. Pair `t` draws from substream `(seed, Baseline, t)`: first the
/// candidate index uniformly, then the reference index uniformly among the
/// remaining sentences.
pub fn compute_baseline(
    pool: &[EmbeddedSentence],
    pairs: usize,
    cfg: &ScoreConfig,
    seed: u64,
    provider: &str,
) -> Result<RescaleBaseline, ScoreError> {
    if pool.len() < 2 {
        return Err(ScoreError::PoolTooSmall(pool.len()));
    }
    if pairs == 0 {
        return Err(ScoreError::NoPairs);
    }
    let raw = cfg.raw();
    let n = pool.len();
    let scores = (0..pairs)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, Domain::Baseline, t as u64);
            let c = rng.random_range(0..n);
            let mut r = rng.random_range(0..n - 1);
            if r >= c {
                r += 1;
            }
            score_pair(&pool[r], &pool[c], &raw)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mean = |f: fn(&ScoreTriple) -> f64| scores.iter().map(f).sum::<f64>() / pairs as f64;
    Ok(RescaleBaseline {
        b_precision: mean(|s| s.precision),
        b_recall: mean(|s| s.recall),
        b_f1: mean(|s| s.f1),
        sample_count: pairs,
        provider: provider.to_string(),
    })
}

/// Scores against every reference and keeps the best F1 (lowest index on ties).
pub fn multi_reference_score(
    candidate: &EmbeddedSentence,
    references: &[EmbeddedSentence],
    cfg: &ScoreConfig,
) -> Result<(ScoreTriple, usize), ScoreError> {
    let mut best: Option<(ScoreTriple, usize)> = None;
    for (i, r) in references.iter().enumerate() {
        let t = score_pair(r, candidate, cfg)?;
        if best.as_ref().is_none_or(|(b, _)| t.f1 > b.f1) {
            best = Some((t, i));
        }
    }
    best.ok_or(ScoreError::NoReferences)
}

/// One line of the score output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    #[serde(rename = "P")]
    pub precision: f64,
    #[serde(rename = "R")]
    pub recall: f64,
    #[serde(rename = "F")]
    pub f1: f64,
    pub rescaled: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ref_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metric: Option<String>,
}

impl ScoreRecord {
    pub fn new(id: impl Into<String>, t: &ScoreTriple, ref_index: Option<usize>) -> Self {
        Self {
            id: id.into(),
            precision: t.precision,
            recall: t.recall,
            f1: t.f1,
            rescaled: t.rescaled,
            ref_index,
            metric: None,
        }
    }
}
