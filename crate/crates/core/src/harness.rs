//! Experiment drivers over human-judged corpora: segment and system level
//! correlation, hybrid super-sampling, model selection, layer sweeps and
//! paraphrase AUC.
//!
//! Candidates are addressed by `(system, id)`. Embedding providers that look
//! sentences up by id see references as `<id>` and candidates as
//! `<system>:<id>` (see [`reference_key`], [`candidate_key`]).

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::embeddings::{EmbeddedSentence, EmbeddingError, EmbeddingProvider, LayerPolicy, PrecomputedStore};
use crate::ngram::{sentence_bleu, Smoothing};
use crate::rng::{substream, Domain};
use crate::scorer::{score_pair, ScoreConfig, ScoreError, ScoreTriple};
use crate::stats::{kendall, mean, pearson, roc_auc, Reported, StatsError};
use crate::tokenizer::{TokenSequence, Vocabulary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: expected {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("dataset coverage gaps: {}", .0.join(", "))]
    Coverage(Vec<String>),
    #[error("dataset has no segments")]
    EmptyDataset,
    #[error("unknown system {0:?}")]
    UnknownSystem(String),
    #[error("no human judgment for {system}:{id}")]
    MissingJudgments { system: String, id: String },
    #[error("metric {metric:?} has no score for {system}:{id}")]
    MissingScore { metric: String, system: String, id: String },
    #[error("sample size {sample} exceeds the {available} available hybrids")]
    SampleTooLarge { sample: usize, available: usize },
    #[error("sample size and trials must be at least 1")]
    EmptySample,
    #[error("layer stacks incomplete: {0}")]
    IncompleteStacks(String),
    #[error("no layer produced a correlation")]
    NoLayers,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

pub fn reference_key(id: &str) -> String {
    id.to_string()
}

pub fn candidate_key(system: &str, id: &str) -> String {
    format!("{system}:{id}")
}

const SEGMENT_HEADER: [&str; 5] = ["id", "system", "reference", "candidate", "human_score"];
const PARAPHRASE_HEADER: [&str; 4] = ["id", "sentence1", "sentence2", "label"];
const SYSTEM_HEADER: [&str; 2] = ["system", "human_score"];
const SENTENCE_HEADER: [&str; 2] = ["id", "text"];

/// Reads a tab-separated file with a fixed header, returning `(line, fields)`
/// for every non-empty row. A row with the wrong number of fields (including
/// text containing a literal tab) is rejected.
fn read_tsv<R: BufRead>(reader: R, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>, HarnessError> {
    let mut lines = reader.lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    let first = first.trim_end_matches('\r');
    if first.split('\t').ne(header.iter().copied()) {
        return Err(HarnessError::Header {
            expected: header.join("\t"),
            found: first.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        if fields.len() != header.len() {
            return Err(HarnessError::Row {
                line: n + 2,
                message: format!("expected {} tab-separated fields, found {}", header.len(), fields.len()),
            });
        }
        rows.push((n + 2, fields));
    }
    Ok(rows)
}

fn parse_score(line: usize, s: &str) -> Result<f64, HarnessError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| HarnessError::Row {
            line,
            message: format!("invalid score {s:?}"),
        })
}

/// Reads an `id, text` file. Ids may repeat; rows keep file order.
pub fn read_sentences<R: BufRead>(reader: R) -> Result<Vec<(String, String)>, HarnessError> {
    read_tsv(reader, &SENTENCE_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            let [id, text]: [String; 2] = f.try_into().expect("field count checked");
            if id.is_empty() {
                return Err(HarnessError::Row {
                    line,
                    message: "empty id".into(),
                });
            }
            Ok((id, text))
        })
        .collect()
}

/// References, system outputs and human judgments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentDataset {
    pub references: BTreeMap<String, String>,
    pub systems: BTreeMap<String, BTreeMap<String, String>>,
    pub human_segment: BTreeMap<(String, String), f64>,
    pub human_system: Option<BTreeMap<String, f64>>,
}

impl SegmentDataset {
    /// Parses the segment corpus (`id, system, reference, candidate,
    /// human_score`). An empty `human_score` cell means the pair has no
    /// judgment. Every system must cover every reference id; all gaps are
    /// reported together.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, HarnessError> {
        let mut ds = Self::default();
        for (line, f) in read_tsv(reader, &SEGMENT_HEADER)? {
            let [id, system, reference, candidate, human]: [String; 5] =
                f.try_into().expect("field count checked");
            if id.is_empty() || system.is_empty() {
                return Err(HarnessError::Row {
                    line,
                    message: "empty id or system".into(),
                });
            }
            match ds.references.get(&id) {
                Some(r) if *r != reference => {
                    return Err(HarnessError::Row {
                        line,
                        message: format!("conflicting reference text for id {id:?}"),
                    })
                }
                Some(_) => {}
                None => {
                    ds.references.insert(id.clone(), reference);
                }
            }
            let outputs = ds.systems.entry(system.clone()).or_default();
            if outputs.insert(id.clone(), candidate).is_some() {
                return Err(HarnessError::Row {
                    line,
                    message: format!("duplicate segment {system}:{id}"),
                });
            }
            if !human.trim().is_empty() {
                ds.human_segment.insert((system, id), parse_score(line, &human)?);
            }
        }
        if ds.references.is_empty() {
            return Err(HarnessError::EmptyDataset);
        }
        ds.validate()?;
        Ok(ds)
    }

    /// Reads `system, human_score` rows and attaches them.
    pub fn read_human_system<R: BufRead>(&mut self, reader: R) -> Result<(), HarnessError> {
        let mut scores = BTreeMap::new();
        for (line, f) in read_tsv(reader, &SYSTEM_HEADER)? {
            if !self.systems.contains_key(&f[0]) {
                return Err(HarnessError::UnknownSystem(f[0].clone()));
            }
            if scores.insert(f[0].clone(), parse_score(line, &f[1])?).is_some() {
                return Err(HarnessError::Row {
                    line,
                    message: format!("duplicate system {:?}", f[0]),
                });
            }
        }
        self.human_system = Some(scores);
        Ok(())
    }

    /// Checks that every system covers every reference id.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut gaps = Vec::new();
        for (system, outputs) in &self.systems {
            for id in self.references.keys() {
                if !outputs.contains_key(id) {
                    gaps.push(candidate_key(system, id));
                }
            }
        }
        if gaps.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Coverage(gaps))
        }
    }

    pub fn system_names(&self) -> Vec<&str> {
        self.systems.keys().map(String::as_str).collect()
    }

    /// All `(system, id)` pairs in sorted order.
    pub fn segments(&self) -> Vec<(String, String)> {
        self.systems
            .iter()
            .flat_map(|(s, out)| out.keys().map(move |id| (s.clone(), id.clone())))
            .collect()
    }

    /// Segments that carry a human judgment, sorted.
    pub fn judged_segments(&self) -> Vec<(String, String)> {
        self.human_segment.keys().cloned().collect()
    }

    pub fn human(&self, system: &str, id: &str) -> Option<f64> {
        self.human_segment.get(&(system.to_string(), id.to_string())).copied()
    }

    /// `(key, text)` for every reference, then every candidate.
    pub fn sentences(&self) -> Vec<(String, String)> {
        let refs = self.references.iter().map(|(id, t)| (reference_key(id), t.clone()));
        let cands = self
            .systems
            .iter()
            .flat_map(|(s, out)| out.iter().map(move |(id, t)| (candidate_key(s, id), t.clone())));
        refs.chain(cands).collect()
    }
}

/// A named metric with a score for each `(system, id)` segment.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricUnderTest {
    pub name: String,
    pub fingerprint: String,
    pub scores: BTreeMap<(String, String), f64>,
}

impl MetricUnderTest {
    pub fn new(
        name: impl Into<String>,
        fingerprint: impl Into<String>,
        scores: BTreeMap<(String, String), f64>,
    ) -> Self {
        Self {
            name: name.into(),
            fingerprint: fingerprint.into(),
            scores,
        }
    }

    /// Human segment judgments as a metric.
    pub fn human(dataset: &SegmentDataset) -> Self {
        Self::new("human", "human", dataset.human_segment.clone())
    }

    /// Smoothed sentence BLEU on whitespace tokens.
    pub fn sentence_bleu(dataset: &SegmentDataset) -> Self {
        let scores = dataset
            .segments()
            .into_par_iter()
            .map(|(s, id)| {
                let c: Vec<String> = dataset.systems[&s][&id].split_whitespace().map(String::from).collect();
                let r: Vec<String> = dataset.references[&id].split_whitespace().map(String::from).collect();
                let v = sentence_bleu(&c, &r, 4, Smoothing::AddOne);
                ((s, id), v)
            })
            .collect();
        Self::new("sentbleu", "sentbleu:add-one:4", scores)
    }

    pub fn get(&self, system: &str, id: &str) -> Result<f64, HarnessError> {
        self.scores
            .get(&(system.to_string(), id.to_string()))
            .copied()
            .ok_or_else(|| HarnessError::MissingScore {
                metric: self.name.clone(),
                system: system.to_string(),
                id: id.to_string(),
            })
    }
}

/// Embeds every reference and candidate once, keyed by [`reference_key`] /
/// [`candidate_key`].
pub fn embed_dataset(
    dataset: &SegmentDataset,
    provider: &EmbeddingProvider,
    vocab: Option<&Vocabulary>,
    policy: &LayerPolicy,
) -> Result<BTreeMap<String, EmbeddedSentence>, HarnessError> {
    let sentences = dataset.sentences();
    let embedded = provider.embed_batch(&sentences, vocab, policy)?;
    Ok(sentences.into_iter().map(|(k, _)| k).zip(embedded).collect())
}

/// Reference-side and candidate-side token sequences of an embedded dataset.
pub fn dataset_tokens(
    dataset: &SegmentDataset,
    embedded: &BTreeMap<String, EmbeddedSentence>,
) -> (Vec<TokenSequence>, Vec<TokenSequence>) {
    let refs = dataset
        .references
        .keys()
        .filter_map(|id| embedded.get(&reference_key(id)))
        .map(|e| e.tokens.clone())
        .collect();
    let cands = dataset
        .segments()
        .iter()
        .filter_map(|(s, id)| embedded.get(&candidate_key(s, id)))
        .map(|e| e.tokens.clone())
        .collect();
    (refs, cands)
}

/// Greedy scores for every segment from pre-embedded sentences.
pub fn score_embedded(
    dataset: &SegmentDataset,
    embedded: &BTreeMap<String, EmbeddedSentence>,
    cfg: &ScoreConfig,
) -> Result<BTreeMap<(String, String), ScoreTriple>, HarnessError> {
    dataset
        .segments()
        .into_par_iter()
        .map(|(s, id)| {
            let missing = |k: String| HarnessError::Embedding(EmbeddingError::MissingSentence(k));
            let r = embedded.get(&reference_key(&id)).ok_or_else(|| missing(reference_key(&id)))?;
            let c = embedded
                .get(&candidate_key(&s, &id))
                .ok_or_else(|| missing(candidate_key(&s, &id)))?;
            let t = score_pair(r, c, cfg)?;
            Ok(((s, id), t))
        })
        .collect()
}

/// Embeds and scores every segment of the dataset.
pub fn score_segments(
    dataset: &SegmentDataset,
    provider: &EmbeddingProvider,
    vocab: Option<&Vocabulary>,
    cfg: &ScoreConfig,
) -> Result<BTreeMap<(String, String), ScoreTriple>, HarnessError> {
    let embedded = embed_dataset(dataset, provider, vocab, &cfg.layer)?;
    score_embedded(dataset, &embedded, cfg)
}

/// Splits greedy triples into `P`, `R` and `F` metrics.
pub fn triple_metrics(
    triples: &BTreeMap<(String, String), ScoreTriple>,
    fingerprint: &str,
) -> [MetricUnderTest; 3] {
    let pick = |name: &str, f: fn(&ScoreTriple) -> f64| {
        MetricUnderTest::new(
            name,
            fingerprint,
            triples.iter().map(|(k, t)| (k.clone(), f(t))).collect(),
        )
    };
    [
        pick("P", |t| t.precision),
        pick("R", |t| t.recall),
        pick("F", |t| t.f1),
    ]
}

/// Unweighted mean of a system's segment scores.
pub fn system_score(
    dataset: &SegmentDataset,
    system: &str,
    metric: &MetricUnderTest,
) -> Result<f64, HarnessError> {
    let outputs = dataset
        .systems
        .get(system)
        .ok_or_else(|| HarnessError::UnknownSystem(system.to_string()))?;
    let v = outputs
        .keys()
        .map(|id| metric.get(system, id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean(&v))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub n: usize,
    pub kendall: Reported,
    pub pearson: Reported,
}

impl Correlation {
    pub fn of(metric: &[f64], human: &[f64]) -> Self {
        Self {
            n: metric.len(),
            kendall: kendall(metric, human).into(),
            pearson: pearson(metric, human).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentCorrelation {
    pub pooled: Correlation,
    pub per_system: BTreeMap<String, Correlation>,
}

/// Metric and human vectors over the judged segments, in sorted order.
pub fn judged_vectors(
    dataset: &SegmentDataset,
    metric: &MetricUnderTest,
) -> Result<(Vec<(String, String)>, Vec<f64>, Vec<f64>), HarnessError> {
    let keys = dataset.judged_segments();
    let m = keys
        .iter()
        .map(|(s, id)| metric.get(s, id))
        .collect::<Result<Vec<_>, _>>()?;
    let h = keys.iter().map(|k| dataset.human_segment[k]).collect();
    Ok((keys, m, h))
}

/// Kendall and Pearson between metric and human over all judged segments,
/// pooled and per system.
pub fn segment_correlation(
    dataset: &SegmentDataset,
    metric: &MetricUnderTest,
) -> Result<SegmentCorrelation, HarnessError> {
    let (keys, m, h) = judged_vectors(dataset, metric)?;
    if keys.is_empty() {
        return Err(StatsError::TooFew { need: 2, got: 0 }.into());
    }
    let mut per: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((s, _), (mv, hv)) in keys.iter().zip(m.iter().zip(&h)) {
        let e = per.entry(s.clone()).or_default();
        e.0.push(*mv);
        e.1.push(*hv);
    }
    Ok(SegmentCorrelation {
        pooled: Correlation::of(&m, &h),
        per_system: per
            .into_iter()
            .map(|(s, (mv, hv))| (s, Correlation::of(&mv, &hv)))
            .collect(),
    })
}

/// A synthetic system that takes each segment from a randomly drawn system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridSystem {
    pub assignment: BTreeMap<String, String>,
    pub human_score: f64,
}

impl HybridSystem {
    /// Mean metric score over the hybrid's segments (sorted id order).
    pub fn score(&self, metric: &MetricUnderTest) -> Result<f64, HarnessError> {
        let v = self
            .assignment
            .iter()
            .map(|(id, s)| metric.get(s, id))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(mean(&v))
    }
}

/// Builds `count` hybrids. Hybrid `h` draws from substream `(seed, Hybrid,
/// h)` one uniform system index per reference id, in sorted id order, over
/// the sorted system names.
pub fn hybrid_supersample(
    dataset: &SegmentDataset,
    count: usize,
    seed: u64,
) -> Result<Vec<HybridSystem>, HarnessError> {
    let systems = dataset.system_names();
    if systems.is_empty() {
        return Err(HarnessError::EmptyDataset);
    }
    let human = MetricUnderTest::human(dataset);
    (0..count)
        .into_par_iter()
        .map(|h| {
            let mut rng = substream(seed, Domain::Hybrid, h as u64);
            let assignment: BTreeMap<String, String> = dataset
                .references
                .keys()
                .map(|id| (id.clone(), systems[rng.random_range(0..systems.len())].to_string()))
                .collect();
            let mut hybrid = HybridSystem {
                assignment,
                human_score: 0.0,
            };
            hybrid.human_score = hybrid.score(&human).map_err(|e| match e {
                HarnessError::MissingScore { system, id, .. } => HarnessError::MissingJudgments { system, id },
                other => other,
            })?;
            Ok(hybrid)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSelectionReport {
    pub hits_at_1: f64,
    pub mrr: f64,
    pub mean_diff: f64,
    pub trials: usize,
    pub sample_size: usize,
}

/// Model selection over hybrids scored by `metric`.
pub fn model_selection(
    hybrids: &[HybridSystem],
    metric: &MetricUnderTest,
    trials: usize,
    sample_size: usize,
    seed: u64,
) -> Result<ModelSelectionReport, HarnessError> {
    let scores = hybrids
        .iter()
        .map(|h| h.score(metric))
        .collect::<Result<Vec<_>, _>>()?;
    let human: Vec<f64> = hybrids.iter().map(|h| h.human_score).collect();
    model_selection_scores(&scores, &human, trials, sample_size, seed)
}

/// Trial `t` samples `sample_size` hybrid indices without replacement from
/// substream `(seed, Selection, t)`. The metric-top hybrid is the highest
/// metric score (smallest index on ties); it is a hit when no sampled hybrid
/// has a strictly higher human score, and its human rank is one plus the
/// number that do.
pub fn model_selection_scores(
    metric: &[f64],
    human: &[f64],
    trials: usize,
    sample_size: usize,
    seed: u64,
) -> Result<ModelSelectionReport, HarnessError> {
    if metric.len() != human.len() {
        return Err(StatsError::LengthMismatch(metric.len(), human.len()).into());
    }
    if trials == 0 || sample_size == 0 {
        return Err(HarnessError::EmptySample);
    }
    if sample_size > metric.len() {
        return Err(HarnessError::SampleTooLarge {
            sample: sample_size,
            available: metric.len(),
        });
    }
    let per_trial: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, Domain::Selection, t as u64);
            let idx = sample(&mut rng, metric.len(), sample_size).into_vec();
            let mut top = idx[0];
            for &i in &idx[1..] {
                if metric[i] > metric[top] || (metric[i] == metric[top] && i < top) {
                    top = i;
                }
            }
            let best = idx.iter().map(|&i| human[i]).fold(f64::NEG_INFINITY, f64::max);
            let above = idx.iter().filter(|&&i| human[i] > human[top]).count();
            let hit = if above == 0 { 1.0 } else { 0.0 };
            (hit, 1.0 / (1 + above) as f64, best - human[top])
        })
        .collect();
    let n = trials as f64;
    Ok(ModelSelectionReport {
        hits_at_1: per_trial.iter().map(|t| t.0).sum::<f64>() / n,
        mrr: per_trial.iter().map(|t| t.1).sum::<f64>() / n,
        mean_diff: per_trial.iter().map(|t| t.2).sum::<f64>() / n,
        trials,
        sample_size,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerPoint {
    pub layer: usize,
    pub pearson: Reported,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSweep {
    pub best_layer: usize,
    pub curve: Vec<LayerPoint>,
}

/// Segment-level Pearson of F1 against human judgments for each layer in
/// `layers`, using precomputed stacks. The best layer is the highest
/// correlation, lowest index on ties.
pub fn layer_sweep(
    dataset: &SegmentDataset,
    stacks: &PrecomputedStore,
    layers: &[usize],
    cfg: &ScoreConfig,
) -> Result<LayerSweep, HarnessError> {
    let keys = dataset.judged_segments();
    let need = layers.iter().max().map_or(0, |m| m + 1);
    let mut ids: BTreeSet<String> = BTreeSet::new();
    for (s, id) in &keys {
        ids.insert(reference_key(id));
        ids.insert(candidate_key(s, id));
    }
    for k in &ids {
        match stacks.get(k) {
            None => return Err(HarnessError::IncompleteStacks(format!("no record for {k:?}"))),
            Some(r) if r.stack.len() < need => {
                return Err(HarnessError::IncompleteStacks(format!(
                    "{k:?} has {} layers, need {need}",
                    r.stack.len()
                )))
            }
            Some(_) => {}
        }
    }
    let human: Vec<f64> = keys.iter().map(|k| dataset.human_segment[k]).collect();
    let mut curve = Vec::with_capacity(layers.len());
    let mut best: Option<(usize, f64)> = None;
    for &layer in layers {
        let policy = LayerPolicy::Single(layer);
        let cfg = ScoreConfig {
            layer: policy.clone(),
            ..cfg.clone()
        };
        let f1: Result<Vec<f64>, HarnessError> = keys
            .par_iter()
            .map(|(s, id)| {
                let r = stacks.get(&reference_key(id)).expect("checked").embedded(&policy)?;
                let c = stacks.get(&candidate_key(s, id)).expect("checked").embedded(&policy)?;
                Ok(score_pair(&r, &c, &cfg)?.f1)
            })
            .collect();
        let point: Reported = match f1 {
            Ok(v) => pearson(&v, &human).into(),
            Err(e) => Reported::error(e.to_string()),
        };
        if let Some(v) = point.value() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((layer, v));
            }
        }
        curve.push(LayerPoint { layer, pearson: point });
    }
    let (best_layer, _) = best.ok_or(HarnessError::NoLayers)?;
    Ok(LayerSweep { best_layer, curve })
}

/// One labeled sentence pair; `sentence1` is treated as the reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParaphrasePair {
    pub id: String,
    pub sentence1: String,
    pub sentence2: String,
    pub label: bool,
}

impl ParaphrasePair {
    /// Provider keys of the two sentences: `<id>:1` and `<id>:2`.
    pub fn keys(&self) -> (String, String) {
        (format!("{}:1", self.id), format!("{}:2", self.id))
    }
}

/// Parses `id, sentence1, sentence2, label` rows with labels `0` or `1`.
pub fn read_paraphrases<R: BufRead>(reader: R) -> Result<Vec<ParaphrasePair>, HarnessError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, f) in read_tsv(reader, &PARAPHRASE_HEADER)? {
        let [id, sentence1, sentence2, label]: [String; 4] = f.try_into().expect("field count checked");
        let label = match label.trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(HarnessError::Row {
                    line,
                    message: format!("label must be 0 or 1, found {other:?}"),
                })
            }
        };
        if !seen.insert(id.clone()) {
            return Err(HarnessError::Row {
                line,
                message: format!("duplicate id {id:?}"),
            });
        }
        out.push(ParaphrasePair {
            id,
            sentence1,
            sentence2,
            label,
        });
    }
    Ok(out)
}

/// Scores every pair and returns the ROC AUC of the scores against the
/// labels, along with the scores.
pub fn paraphrase_auc<F, E>(pairs: &[ParaphrasePair], metric: F) -> Result<(f64, Vec<f64>), HarnessError>
where
    F: Fn(&ParaphrasePair) -> Result<f64, E> + Sync,
    E: Into<HarnessError> + Send,
{
    let scores = pairs
        .par_iter()
        .map(|p| metric(p).map_err(Into::into))
        .collect::<Result<Vec<f64>, HarnessError>>()?;
    let labels: Vec<bool> = pairs.iter().map(|p| p.label).collect();
    Ok((roc_auc(&labels, &scores)?, scores))
}
