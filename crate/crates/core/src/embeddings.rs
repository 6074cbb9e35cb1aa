//! Token embeddings: normalization, layer selection, power-mean aggregation
//! and the providers that supply vectors.
//!
//! Three providers are supported:
//!
//! * [`StaticTable`]: a fixed piece → vector map (no context). Unknown pieces
//!   get either a dedicated vector or a deterministic pseudo-random direction
//!   derived from the piece string.
//! * [`PrecomputedStore`]: per-sentence layer stacks loaded from JSON Lines.
//! * [`RemoteClient`]: the same records fetched over HTTP.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::tokenizer::{self, TokenSequence, Vocabulary, DEFAULT_CONTINUATION_PREFIX};

/// Rows with a norm below this are treated as zero vectors.
pub const ZERO_NORM: f64 = 1e-12;
/// Tolerance on the unit norm of normalized rows.
pub const UNIT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("row {row} is a zero vector")]
    ZeroVector { row: usize },
    #[error("layer {index} out of range (stack has {layers} layers)")]
    LayerOutOfRange { index: usize, layers: usize },
    #[error("power-mean exponent {0} is not admissible (allowed: -inf, +inf, 1, odd positive integers)")]
    InadmissibleExponent(f64),
    #[error("no exponents given for power-mean aggregation")]
    NoExponents,
    #[error("sentence {0:?} is not available from the provider")]
    MissingSentence(String),
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("layer stack is empty")]
    EmptyStack,
    #[error("layers have differing shapes")]
    RaggedStack,
    #[error("sentence {id:?}: provider has {stored} tokens, caller has {given}")]
    TokenMismatch {
        id: String,
        stored: usize,
        given: usize,
    },
    #[error("duplicate entry {0:?}")]
    Duplicate(String),
    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Per-token vectors, one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    values: Matrix,
    normalized: bool,
}

impl EmbeddingMatrix {
    pub fn new(values: Matrix) -> Self {
        Self {
            values,
            normalized: false,
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Option<Self> {
        Matrix::from_rows(rows).map(Self::new)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Keeps the listed rows; the normalized flag carries over.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let cols: Vec<usize> = (0..self.dim()).collect();
        Self {
            values: self.values.select(rows, &cols),
            normalized: self.normalized,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Divides every row by its Euclidean norm.
pub fn normalize_rows(m: &EmbeddingMatrix) -> Result<EmbeddingMatrix, EmbeddingError> {
    let mut values = m.values.clone();
    for i in 0..values.rows() {
        let row = values.row_mut(i);
        let n = norm(row);
        if n < ZERO_NORM {
            return Err(EmbeddingError::ZeroVector { row: i });
        }
        row.iter_mut().for_each(|x| *x /= n);
    }
    Ok(EmbeddingMatrix {
        values,
        normalized: true,
    })
}

/// All encoder layers for one sentence; layer 0 holds the input embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    layers: Vec<EmbeddingMatrix>,
}

impl LayerStack {
    pub fn new(layers: Vec<EmbeddingMatrix>) -> Result<Self, EmbeddingError> {
        let first = layers.first().ok_or(EmbeddingError::EmptyStack)?;
        let shape = (first.rows(), first.dim());
        if layers.iter().any(|l| (l.rows(), l.dim()) != shape) {
            return Err(EmbeddingError::RaggedStack);
        }
        Ok(Self { layers })
    }

    pub fn single(layer: EmbeddingMatrix) -> Self {
        Self {
            layers: vec![layer],
        }
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.layers[0].rows()
    }

    pub fn dim(&self) -> usize {
        self.layers[0].dim()
    }

    pub fn layers(&self) -> &[EmbeddingMatrix] {
        &self.layers
    }
}

pub fn select_layer(stack: &LayerStack, index: usize) -> Result<EmbeddingMatrix, EmbeddingError> {
    stack
        .layers
        .get(index)
        .cloned()
        .ok_or(EmbeddingError::LayerOutOfRange {
            index,
            layers: stack.len(),
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PowerExponent {
    Min,
    Max,
    Odd(i32),
}

impl PowerExponent {
    fn parse(p: f64) -> Result<Self, EmbeddingError> {
        if p == f64::INFINITY {
            Ok(Self::Max)
        } else if p == f64::NEG_INFINITY {
            Ok(Self::Min)
        } else if p.fract() == 0.0 && p >= 1.0 && p <= i32::MAX as f64 && (p as i64) % 2 == 1 {
            Ok(Self::Odd(p as i32))
        } else {
            Err(EmbeddingError::InadmissibleExponent(p))
        }
    }

    fn apply(self, values: &[f64]) -> f64 {
        match self {
            Self::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Self::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Self::Odd(1) => values.iter().sum::<f64>() / values.len() as f64,
            Self::Odd(p) => {
                let mean = values.iter().map(|v| v.powi(p)).sum::<f64>() / values.len() as f64;
                // odd root keeps the sign
                mean.signum() * mean.abs().powf(1.0 / p as f64)
            }
        }
    }
}

/// Power-mean aggregation across all layers of `stack`.
///
/// Each layer is row-normalized, then for every exponent the elementwise
/// generalized mean across layers is taken. The per-exponent results are
/// concatenated along the dimension axis (in the order given) and the
/// concatenation is row-normalized again.
pub fn power_mean_aggregate(
    stack: &LayerStack,
    exponents: &[f64],
) -> Result<EmbeddingMatrix, EmbeddingError> {
    if exponents.is_empty() {
        return Err(EmbeddingError::NoExponents);
    }
    let exps = exponents
        .iter()
        .map(|&p| PowerExponent::parse(p))
        .collect::<Result<Vec<_>, _>>()?;
    let layers = stack
        .layers
        .iter()
        .map(normalize_rows)
        .collect::<Result<Vec<_>, _>>()?;
    let (rows, dim) = (stack.rows(), stack.dim());
    let mut out = Matrix::zeros(rows, dim * exps.len());
    let mut column = vec![0.0; layers.len()];
    for i in 0..rows {
        for d in 0..dim {
            for (l, layer) in layers.iter().enumerate() {
                column[l] = layer.values.get(i, d);
            }
            for (k, e) in exps.iter().enumerate() {
                out.set(i, k * dim + d, e.apply(&column));
            }
        }
    }
    normalize_rows(&EmbeddingMatrix::new(out))
}

/// How a layer stack becomes the single matrix used for scoring.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerPolicy {
    Single(usize),
    PowerMeans {
        layers: Vec<usize>,
        exponents: Vec<f64>,
    },
}

impl Default for LayerPolicy {
    fn default() -> Self {
        Self::Single(0)
    }
}

impl LayerPolicy {
    /// The aggregation used by the PMEANS ablation: the given layers with
    /// exponents {1, +inf, -inf}.
    pub fn pmeans(layers: Vec<usize>) -> Self {
        Self::PowerMeans {
            layers,
            exponents: vec![1.0, f64::INFINITY, f64::NEG_INFINITY],
        }
    }

    /// Returns a row-normalized matrix.
    pub fn apply(&self, stack: &LayerStack) -> Result<EmbeddingMatrix, EmbeddingError> {
        match self {
            Self::Single(i) => normalize_rows(&select_layer(stack, *i)?),
            Self::PowerMeans { layers, exponents } => {
                let picked = layers
                    .iter()
                    .map(|&i| select_layer(stack, i))
                    .collect::<Result<Vec<_>, _>>()?;
                power_mean_aggregate(&LayerStack::new(picked)?, exponents)
            }
        }
    }

    /// Highest layer index the policy touches.
    pub fn max_layer(&self) -> usize {
        match self {
            Self::Single(i) => *i,
            Self::PowerMeans { layers, .. } => layers.iter().copied().max().unwrap_or(0),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Single(i) => format!("layer:{i}"),
            Self::PowerMeans { layers, exponents } => {
                let ls: Vec<String> = layers.iter().map(usize::to_string).collect();
                let es: Vec<String> = exponents.iter().map(|e| format_exponent(*e)).collect();
                format!("pmeans:{}:{}", ls.join(","), es.join(","))
            }
        }
    }
}

fn format_exponent(e: f64) -> String {
    if e == f64::INFINITY {
        "inf".into()
    } else if e == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{e}")
    }
}

/// A sentence with its tokens and the matrix that will be scored.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSentence {
    pub tokens: TokenSequence,
    pub embeddings: EmbeddingMatrix,
}

/// Carrier for a precomputed sentence: tokens plus every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub tokens: TokenSequence,
    pub stack: LayerStack,
}

/// Wire and file shape of an [`EmbeddingRecord`]; `layers[l][t][d]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordLine {
    pub id: String,
    pub tokens: Vec<String>,
    pub layers: Vec<Vec<Vec<f64>>>,
}

impl EmbeddingRecord {
    pub fn new(id: String, tokens: TokenSequence, stack: LayerStack) -> Result<Self, EmbeddingError> {
        if stack.rows() != tokens.len() {
            return Err(EmbeddingError::TokenMismatch {
                id,
                stored: stack.rows(),
                given: tokens.len(),
            });
        }
        Ok(Self { id, tokens, stack })
    }

    pub fn from_line(line: RecordLine) -> Result<Self, EmbeddingError> {
        let layers = line
            .layers
            .iter()
            .map(|l| {
                if l.is_empty() {
                    // a zero-token sentence still has a (0 x 0) layer
                    Ok(EmbeddingMatrix::new(Matrix::zeros(0, 0)))
                } else {
                    EmbeddingMatrix::from_rows(l).ok_or(EmbeddingError::RaggedStack)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let tokens = TokenSequence::from_pieces(line.tokens, DEFAULT_CONTINUATION_PREFIX);
        Self::new(line.id, tokens, LayerStack::new(layers)?)
    }

    pub fn to_line(&self) -> RecordLine {
        RecordLine {
            id: self.id.clone(),
            tokens: self.tokens.pieces().to_vec(),
            layers: self.stack.layers.iter().map(|l| l.values.to_rows()).collect(),
        }
    }

    /// Applies `policy` and pairs the result with the stored tokens.
    pub fn embedded(&self, policy: &LayerPolicy) -> Result<EmbeddedSentence, EmbeddingError> {
        Ok(EmbeddedSentence {
            tokens: self.tokens.clone(),
            embeddings: policy.apply(&self.stack)?,
        })
    }
}

/// What to do with a piece missing from a [`StaticTable`].
#[derive(Debug, Clone, PartialEq)]
pub enum UnknownPolicy {
    Vector(Vec<f64>),
    /// Pseudo-random unit direction: the first 8 bytes of
    /// `SHA-256(seed LE || piece)` seed ChaCha8, which draws standard normal
    /// coordinates that are then normalized.
    SeededHash { seed: u64 },
}

/// Context-free lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    unknown: UnknownPolicy,
}

#[derive(Debug, Serialize, Deserialize)]
struct StaticLine {
    piece: String,
    vector: Vec<f64>,
}

impl StaticTable {
    pub fn new(
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
        unknown: UnknownPolicy,
    ) -> Result<Self, EmbeddingError> {
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (piece, v) in entries {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            if vectors.insert(piece.clone(), v).is_some() {
                return Err(EmbeddingError::Duplicate(piece));
            }
        }
        let dim = match (dim, &unknown) {
            (Some(d), _) => d,
            (None, UnknownPolicy::Vector(v)) => v.len(),
            (None, UnknownPolicy::SeededHash { .. }) => {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: 1,
                    got: 0,
                })
            }
        };
        if dim == 0 {
            return Err(EmbeddingError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if let UnknownPolicy::Vector(v) = &unknown {
            if v.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        Ok(Self {
            dim,
            vectors,
            unknown,
        })
    }

    /// Reads `{"piece": ..., "vector": [...]}` lines. Blank lines are skipped.
    pub fn from_jsonl<R: BufRead>(reader: R, unknown: UnknownPolicy) -> Result<Self, EmbeddingError> {
        let mut entries = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| parse_err(n, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let l: StaticLine = serde_json::from_str(&line).map_err(|e| parse_err(n, e))?;
            entries.push((l.piece, l.vector));
        }
        Self::new(entries, unknown)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn lookup(&self, piece: &str) -> Vec<f64> {
        if let Some(v) = self.vectors.get(piece) {
            return v.clone();
        }
        match &self.unknown {
            UnknownPolicy::Vector(v) => v.clone(),
            UnknownPolicy::SeededHash { seed } => hashed_direction(*seed, piece, self.dim),
        }
    }

    fn fingerprint_into(&self, h: &mut Sha256) {
        let sorted: BTreeMap<_, _> = self.vectors.iter().collect();
        for (p, v) in sorted {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p.as_bytes());
            v.iter().for_each(|x| h.update(x.to_le_bytes()));
        }
        match &self.unknown {
            UnknownPolicy::Vector(v) => {
                h.update(b"unk-vector");
                v.iter().for_each(|x| h.update(x.to_le_bytes()));
            }
            UnknownPolicy::SeededHash { seed } => {
                h.update(b"unk-hash");
                h.update(seed.to_le_bytes());
            }
        }
    }
}

fn hashed_direction(seed: u64, piece: &str, dim: usize) -> Vec<f64> {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(piece.as_bytes())
        .finalize();
    let mut s = [0u8; 8];
    s.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from_le_bytes(s));
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&v);
        if n >= ZERO_NORM {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn parse_err(line: usize, e: impl std::fmt::Display) -> EmbeddingError {
    EmbeddingError::Parse {
        line: line + 1,
        message: e.to_string(),
    }
}

/// Sentence id → record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrecomputedStore {
    records: HashMap<String, EmbeddingRecord>,
}

impl PrecomputedStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: EmbeddingRecord) -> Result<(), EmbeddingError> {
        if self.records.contains_key(&record.id) {
            return Err(EmbeddingError::Duplicate(record.id));
        }
        self.records.insert(record.id.clone(), record);
        Ok(())
    }

    pub fn from_records(
        records: impl IntoIterator<Item = EmbeddingRecord>,
    ) -> Result<Self, EmbeddingError> {
        let mut store = Self::new();
        for r in records {
            store.insert(r)?;
        }
        Ok(store)
    }

    /// Reads JSON Lines records (blank lines skipped).
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        Self::from_records(parse_record_lines(reader)?)
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingRecord> {
        self.records.get(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// Smallest layer count over all records (0 for an empty store).
    pub fn min_layers(&self) -> usize {
        self.records.values().map(|r| r.stack.len()).min().unwrap_or(0)
    }

    fn fingerprint_into(&self, h: &mut Sha256) {
        let sorted: BTreeMap<_, _> = self.records.iter().collect();
        for (id, r) in sorted {
            h.update((id.len() as u64).to_le_bytes());
            h.update(id.as_bytes());
            for p in r.tokens.pieces() {
                h.update((p.len() as u64).to_le_bytes());
                h.update(p.as_bytes());
            }
            for l in r.stack.layers() {
                l.values().as_slice().iter().for_each(|x| h.update(x.to_le_bytes()));
            }
        }
    }
}

fn parse_record_lines<R: BufRead>(reader: R) -> Result<Vec<EmbeddingRecord>, EmbeddingError> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| parse_err(n, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(&line).map_err(|e| parse_err(n, e))?;
        out.push(EmbeddingRecord::from_line(rec).map_err(|e| parse_err(n, e))?);
    }
    Ok(out)
}

/// Request body sent to a remote embedding service.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RemoteRequest {
    pub sentences: Vec<RemoteSentence>,
    pub layers: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RemoteSentence {
    pub id: String,
    pub text: String,
}

/// HTTP client for a remote embedding service.
///
/// POSTs a [`RemoteRequest`] as JSON to `endpoint` and expects a 2xx response
/// whose body is JSON Lines of [`RecordLine`]s, with `layers` ordered as in
/// the request. Failed attempts are retried `retries` times with the delay
/// doubling from `backoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct RemoteClient {
    pub endpoint: String,
    pub timeout: Duration,
    pub layers: Vec<usize>,
    pub retries: u32,
    pub backoff: Duration,
}

impl RemoteClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, layers: Vec<usize>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout,
            layers,
            retries: 2,
            backoff: Duration::from_millis(200),
        }
    }

    pub fn fetch(&self, sentences: &[RemoteSentence]) -> Result<Vec<EmbeddingRecord>, EmbeddingError> {
        let body = serde_json::to_string(&RemoteRequest {
            sentences: sentences.to_vec(),
            layers: self.layers.clone(),
        })
        .map_err(|e| EmbeddingError::ProviderUnavailable(e.to_string()))?;
        let mut delay = self.backoff;
        let mut last_error = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(&body) {
                Ok(records) => return self.check_coverage(sentences, records),
                Err(e) => {
                    log::warn!("embedding request attempt {} failed: {e}", attempt + 1);
                    last_error = e;
                }
            }
        }
        Err(EmbeddingError::ProviderUnavailable(last_error))
    }

    /// Fetches every sentence in one request and stores the results.
    pub fn fetch_store(&self, sentences: &[RemoteSentence]) -> Result<PrecomputedStore, EmbeddingError> {
        PrecomputedStore::from_records(self.fetch(sentences)?)
    }

    fn attempt(&self, body: &str) -> Result<Vec<EmbeddingRecord>, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut resp = agent
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP status {status}"));
        }
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        parse_record_lines(text.as_bytes()).map_err(|e| format!("malformed response: {e}"))
    }

    fn check_coverage(
        &self,
        sentences: &[RemoteSentence],
        records: Vec<EmbeddingRecord>,
    ) -> Result<Vec<EmbeddingRecord>, EmbeddingError> {
        let mut by_id: HashMap<String, EmbeddingRecord> =
            records.into_iter().map(|r| (r.id.clone(), r)).collect();
        sentences
            .iter()
            .map(|s| {
                let rec = by_id
                    .remove(&s.id)
                    .ok_or_else(|| EmbeddingError::MissingSentence(s.id.clone()))?;
                if !self.layers.is_empty() && rec.stack.len() != self.layers.len() {
                    return Err(EmbeddingError::ProviderUnavailable(format!(
                        "sentence {:?}: {} layers returned, {} requested",
                        s.id,
                        rec.stack.len(),
                        self.layers.len()
                    )));
                }
                Ok(rec)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingProvider {
    Static(StaticTable),
    Precomputed(PrecomputedStore),
    Remote(RemoteClient),
}

impl EmbeddingProvider {
    /// Embeds an already tokenized sentence. `id` is only consulted by the
    /// precomputed and remote providers; the remote provider sends the text
    /// rebuilt from the tokens.
    pub fn embed(
        &self,
        tokens: &TokenSequence,
        id: &str,
        policy: &LayerPolicy,
    ) -> Result<EmbeddingMatrix, EmbeddingError> {
        let check = |stored: usize| {
            if stored == tokens.len() {
                Ok(())
            } else {
                Err(EmbeddingError::TokenMismatch {
                    id: id.to_string(),
                    stored,
                    given: tokens.len(),
                })
            }
        };
        match self {
            Self::Static(table) => {
                let rows: Vec<Vec<f64>> = tokens.pieces().iter().map(|p| table.lookup(p)).collect();
                let m = if rows.is_empty() {
                    Matrix::zeros(0, table.dim())
                } else {
                    Matrix::from_rows(&rows).expect("table vectors share one dimension")
                };
                policy.apply(&LayerStack::single(EmbeddingMatrix::new(m)))
            }
            Self::Precomputed(store) => {
                let rec = store
                    .get(id)
                    .ok_or_else(|| EmbeddingError::MissingSentence(id.to_string()))?;
                check(rec.tokens.len())?;
                policy.apply(&rec.stack)
            }
            Self::Remote(client) => {
                let text = tokens.reconstruct_text(DEFAULT_CONTINUATION_PREFIX);
                let rec = client
                    .fetch(&[RemoteSentence {
                        id: id.to_string(),
                        text,
                    }])?
                    .pop()
                    .ok_or_else(|| EmbeddingError::MissingSentence(id.to_string()))?;
                check(rec.tokens.len())?;
                policy.apply(&rec.stack)
            }
        }
    }

    /// Tokenizes (static provider) or looks up (other providers) a raw
    /// sentence and embeds it. Without a vocabulary the static provider treats
    /// each whitespace-delimited word as one piece.
    pub fn embed_text(
        &self,
        id: &str,
        text: &str,
        vocab: Option<&Vocabulary>,
        policy: &LayerPolicy,
    ) -> Result<EmbeddedSentence, EmbeddingError> {
        match self {
            Self::Static(_) => {
                let tokens = match vocab {
                    Some(v) => tokenizer::tokenize(text, v),
                    None => TokenSequence::from_words(text),
                };
                let embeddings = self.embed(&tokens, id, policy)?;
                Ok(EmbeddedSentence { tokens, embeddings })
            }
            Self::Precomputed(store) => store
                .get(id)
                .ok_or_else(|| EmbeddingError::MissingSentence(id.to_string()))?
                .embedded(policy),
            Self::Remote(client) => client
                .fetch(&[RemoteSentence {
                    id: id.to_string(),
                    text: text.to_string(),
                }])?
                .pop()
                .ok_or_else(|| EmbeddingError::MissingSentence(id.to_string()))?
                .embedded(policy),
        }
    }

    /// Tokens and the unaggregated layer stack of one sentence, for callers
    /// that switch layer policies per run. A static provider yields a
    /// single-layer stack.
    pub fn record(
        &self,
        id: &str,
        text: &str,
        vocab: Option<&Vocabulary>,
    ) -> Result<EmbeddingRecord, EmbeddingError> {
        match self {
            Self::Static(table) => {
                let tokens = match vocab {
                    Some(v) => tokenizer::tokenize(text, v),
                    None => TokenSequence::from_words(text),
                };
                let rows: Vec<Vec<f64>> = tokens.pieces().iter().map(|p| table.lookup(p)).collect();
                let m = if rows.is_empty() {
                    Matrix::zeros(0, table.dim())
                } else {
                    Matrix::from_rows(&rows).expect("table vectors share one dimension")
                };
                EmbeddingRecord::new(id.to_string(), tokens, LayerStack::single(EmbeddingMatrix::new(m)))
            }
            Self::Precomputed(store) => store
                .get(id)
                .cloned()
                .ok_or_else(|| EmbeddingError::MissingSentence(id.to_string())),
            Self::Remote(client) => client
                .fetch(&[RemoteSentence {
                    id: id.to_string(),
                    text: text.to_string(),
                }])?
                .pop()
                .ok_or_else(|| EmbeddingError::MissingSentence(id.to_string())),
        }
    }

    /// Embeds many `(id, text)` pairs. The remote provider issues a single
    /// request; the others fan out across threads. Output order matches input.
    pub fn embed_batch(
        &self,
        sentences: &[(String, String)],
        vocab: Option<&Vocabulary>,
        policy: &LayerPolicy,
    ) -> Result<Vec<EmbeddedSentence>, EmbeddingError> {
        if let Self::Remote(client) = self {
            let req: Vec<RemoteSentence> = sentences
                .iter()
                .map(|(id, text)| RemoteSentence {
                    id: id.clone(),
                    text: text.clone(),
                })
                .collect();
            return client
                .fetch(&req)?
                .iter()
                .map(|r| r.embedded(policy))
                .collect();
        }
        sentences
            .par_iter()
            .map(|(id, text)| self.embed_text(id, text, vocab, policy))
            .collect()
    }

    /// Stable content hash identifying the provider.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let kind = match self {
            Self::Static(t) => {
                h.update(b"static");
                t.fingerprint_into(&mut h);
                "static"
            }
            Self::Precomputed(s) => {
                h.update(b"precomputed");
                s.fingerprint_into(&mut h);
                "precomputed"
            }
            Self::Remote(c) => {
                h.update(b"remote");
                h.update(c.endpoint.as_bytes());
                c.layers.iter().for_each(|l| h.update((*l as u64).to_le_bytes()));
                "remote"
            }
        };
        format!("{kind}:{}", &hex::encode(h.finalize())[..16])
    }
}
