use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use embedscore::embeddings::EmbeddingProvider;
use embedscore::harness::{
    candidate_key, embed_dataset, hybrid_supersample, judged_vectors, layer_sweep, model_selection,
    paraphrase_auc, read_paraphrases, reference_key, score_embedded, segment_correlation, system_score,
    Correlation, LayerSweep, MetricUnderTest, ModelSelectionReport, SegmentCorrelation, SegmentDataset,
};
use embedscore::ngram::{sentence_bleu, Smoothing};
use embedscore::scorer::{compute_baseline, multi_reference_score, score_pair, RescaleBaseline, ScoreConfig, ScoreRecord};
use embedscore::stats::{bootstrap_compare, pearson, williams_test, Reported, WilliamsResult};
use embedscore::tokenizer::tokenize;
use embedscore::transport::{compare_matching, AblationRow, AblationSegment, AblationSetup, FlagSet};
use embedscore::{EmbeddedSentence, LayerPolicy, ScoreTriple, TokenSequence};
use rayon::prelude::*;
use serde::Serialize;

use crate::common::*;

const WILLIAMS_CONVENTION: &str =
    "one-sided test of r12 > r13 with r12, r13 = |pearson| of each metric with human and r23 = signed pearson between the two metrics";

/// A statistic or block that may fail independently of the rest of a report.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Ok(T),
    Err { error: String },
}

impl<T, E: Display> From<Result<T, E>> for Outcome<T> {
    fn from(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Err { error: e.to_string() },
        }
    }
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(String::from).collect()
}

fn bleu(candidate: &str, reference: &str) -> f64 {
    sentence_bleu(&words(candidate), &words(reference), 4, Smoothing::AddOne)
}

fn fingerprint(model: &Model, cfg: &ScoreConfig) -> String {
    let idf = match &cfg.idf {
        None => "none".to_string(),
        Some(p) if p.reference == p.candidate => format!("shared:{}", p.reference.corpus_size()),
        Some(p) => format!("separate:{}:{}", p.reference.corpus_size(), p.candidate.corpus_size()),
    };
    format!(
        "{}|{}|filter:{}|idf:{}|rescaled:{}",
        model.fingerprint,
        model.policy.describe(),
        model.filter.name(),
        idf,
        cfg.baseline.is_some()
    )
}

// ---------------------------------------------------------------- score

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMetric {
    /// Greedy embedding matching (P, R, F)
    Greedy,
    /// Smoothed sentence BLEU on whitespace tokens (written to P, R and F)
    Sentbleu,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// References: TSV `id, text`; a repeated id adds another reference
    #[arg(long)]
    pub refs: PathBuf,
    /// Candidates: TSV `id, text` with unique ids
    #[arg(long)]
    pub cands: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long, value_enum, default_value_t = ScoreMetric::Greedy)]
    pub metric: ScoreMetric,
    /// Output JSON Lines file
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

/// Provider key of the `k`-th reference with a given id.
fn multi_ref_key(id: &str, k: usize) -> String {
    if k == 0 {
        reference_key(id)
    } else {
        format!("{}#{k}", reference_key(id))
    }
}

fn grouped_refs(refs: &[(String, String)]) -> BTreeMap<&str, Vec<&str>> {
    let mut by_id: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, text) in refs {
        by_id.entry(id).or_default().push(text);
    }
    by_id
}

pub fn score(a: &ScoreArgs) -> CliResult<()> {
    let refs = read_sentences(&a.refs)?;
    let cands = read_sentences(&a.cands)?;
    let by_id = grouped_refs(&refs);
    let mut seen = BTreeSet::new();
    for (id, _) in &cands {
        if !seen.insert(id.as_str()) {
            return Err(invalid(format!("duplicate candidate id {id:?}")));
        }
    }
    let orphans: Vec<&str> = cands
        .iter()
        .map(|(id, _)| id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !orphans.is_empty() {
        return Err(invalid(format!("candidate ids without a reference: {}", orphans.join(", "))));
    }
    let records: Vec<ScoreRecord> = match a.metric {
        ScoreMetric::Sentbleu => cands
            .iter()
            .map(|(id, text)| {
                let rs = &by_id[id.as_str()];
                let mut best = (f64::NEG_INFINITY, 0);
                for (k, r) in rs.iter().enumerate() {
                    let v = bleu(text, r);
                    if v > best.0 {
                        best = (v, k);
                    }
                }
                let t = ScoreTriple {
                    precision: best.0,
                    recall: best.0,
                    f1: best.0,
                    rescaled: false,
                    f1_undefined: false,
                };
                let mut rec = ScoreRecord::new(id.clone(), &t, (rs.len() > 1).then_some(best.1));
                rec.metric = Some("sentbleu".into());
                rec
            })
            .collect(),
        ScoreMetric::Greedy => {
            let model = a.model.load()?;
            let mut sentences: Vec<(String, String)> = Vec::new();
            for (id, texts) in &by_id {
                for (k, t) in texts.iter().enumerate() {
                    sentences.push((multi_ref_key(id, k), t.to_string()));
                }
            }
            let n_refs = sentences.len();
            sentences.extend(cands.iter().map(|(id, t)| (candidate_key("cand", id), t.clone())));
            let embedded = model
                .provider
                .embed_batch(&sentences, model.vocab.as_ref(), &model.policy)
                .map_err(embed_err)?;
            let ref_tokens: Vec<TokenSequence> = embedded[..n_refs].iter().map(|e| e.tokens.clone()).collect();
            let cand_tokens: Vec<TokenSequence> = embedded[n_refs..].iter().map(|e| e.tokens.clone()).collect();
            let cfg = a.scoring.config(&model, &ref_tokens, &cand_tokens)?;
            let by_key: BTreeMap<&str, &EmbeddedSentence> =
                sentences.iter().map(|(k, _)| k.as_str()).zip(embedded.iter()).collect();
            cands
                .par_iter()
                .map(|(id, _)| {
                    let c = by_key[candidate_key("cand", id).as_str()];
                    let n = by_id[&**id].len();
                    let result = if n == 1 {
                        score_pair(by_key[multi_ref_key(id, 0).as_str()], c, &cfg).map(|t| (t, None))
                    } else {
                        let rs: Vec<EmbeddedSentence> =
                            (0..n).map(|k| by_key[multi_ref_key(id, k).as_str()].clone()).collect();
                        multi_reference_score(c, &rs, &cfg).map(|(t, k)| (t, Some(k)))
                    };
                    let (t, k) = result.runtime(format!("scoring candidate {id:?}"))?;
                    Ok(ScoreRecord::new(id.clone(), &t, k))
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let mut bytes = Vec::new();
    for r in &records {
        bytes.extend(serde_json::to_vec(r).runtime("serialization failed")?);
        bytes.push(b'\n');
    }
    write_atomic(&a.out, &bytes)?;
    log::info!("wrote {} score records to {}", records.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------- idf

#[derive(Debug, Args, Serialize)]
pub struct IdfArgs {
    /// Reference corpus: TSV `id, text`
    #[arg(long)]
    pub refs: PathBuf,
    /// Take tokens from this provider instead of the vocabulary
    #[arg(long)]
    pub provider: Option<String>,
    /// WordPiece vocabulary; without it each whitespace-delimited word is one piece
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Output idf table (JSON Lines)
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn idf(a: &IdfArgs) -> CliResult<()> {
    let refs = read_sentences(&a.refs)?;
    let tokens: Vec<TokenSequence> = if a.provider.is_some() {
        let model = ModelArgs {
            provider: a.provider.clone(),
            vocab: a.vocab.clone(),
            layer: 0,
            pmeans: Vec::new(),
            filter: FilterArg::None,
            unk_seed: 0,
            timeout_secs: 30,
        }
        .load()?;
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        refs.iter()
            .map(|(id, text)| {
                let k = counts.entry(id).or_default();
                let key = multi_ref_key(id, *k);
                *k += 1;
                model
                    .provider
                    .record(&key, text, model.vocab.as_ref())
                    .map(|r| r.tokens)
                    .map_err(embed_err)
            })
            .collect::<CliResult<_>>()?
    } else {
        let vocab = match &a.vocab {
            Some(p) => Some(
                embedscore::Vocabulary::from_reader(open(p)?, Default::default())
                    .invalid(format!("{}", p.display()))?,
            ),
            None => None,
        };
        refs.iter()
            .map(|(_, t)| match &vocab {
                Some(v) => tokenize(t, v),
                None => TokenSequence::from_words(t),
            })
            .collect()
    };
    let table = embedscore::idf::build_idf(&tokens).invalid(format!("{}", a.refs.display()))?;
    let mut bytes = Vec::new();
    table.write_jsonl(&mut bytes).runtime("serialization failed")?;
    write_atomic(&a.out, &bytes)
}

// ---------------------------------------------------------------- baseline

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    /// Sentence pool: TSV `id, text` with unique ids
    #[arg(long)]
    pub pool: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of random pairs averaged
    #[arg(long, default_value_t = 10_000)]
    pub pairs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON report
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct BaselineBody {
    baseline: RescaleBaseline,
}

pub fn baseline(a: &BaselineArgs) -> CliResult<()> {
    let seed = require_seed(a.seed, "for baseline")?;
    let pool = read_sentences(&a.pool)?;
    let mut seen = BTreeSet::new();
    if let Some((id, _)) = pool.iter().find(|(id, _)| !seen.insert(id.clone())) {
        return Err(invalid(format!("duplicate pool id {id:?}")));
    }
    let model = a.model.load()?;
    let embedded = model
        .provider
        .embed_batch(&pool, model.vocab.as_ref(), &model.policy)
        .map_err(embed_err)?;
    let cfg = ScoreConfig {
        idf: None,
        filter: model.filter.clone(),
        layer: model.policy.clone(),
        baseline: None,
    };
    let b = compute_baseline(&embedded, a.pairs, &cfg, seed, &model.fingerprint).invalid("baseline")?;
    write_json(
        &a.out,
        &Report::new("baseline", a, Some(&model.fingerprint), Some(seed), BaselineBody { baseline: b }),
    )
}

// ---------------------------------------------------------------- shared metric evaluation

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
pub enum MetricName {
    #[value(name = "F")]
    F,
    #[value(name = "P")]
    P,
    #[value(name = "R")]
    R,
    #[value(name = "sentbleu")]
    #[serde(rename = "sentbleu")]
    SentBleu,
    #[value(name = "human")]
    #[serde(rename = "human")]
    Human,
}

impl MetricName {
    fn greedy(self) -> bool {
        matches!(self, Self::F | Self::P | Self::R)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct MetricArgs {
    /// Metrics to evaluate (comma separated): F, P, R, sentbleu, human
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MetricName::F, MetricName::P, MetricName::R, MetricName::SentBleu])]
    pub metrics: Vec<MetricName>,
}

struct Evaluated {
    metrics: Vec<MetricUnderTest>,
    provider: Option<String>,
}

fn evaluate(
    dataset: &SegmentDataset,
    names: &[MetricName],
    model_args: &ModelArgs,
    scoring: &ScoringArgs,
) -> CliResult<Evaluated> {
    let mut unique = Vec::new();
    for n in names {
        if !unique.contains(n) {
            unique.push(*n);
        }
    }
    if unique.is_empty() {
        return Err(invalid("no metrics requested"));
    }
    let mut greedy: Option<(BTreeMap<(String, String), ScoreTriple>, String)> = None;
    let mut provider = None;
    if unique.iter().any(|n| n.greedy()) {
        let model = model_args.load()?;
        let embedded = embed_dataset(dataset, &model.provider, model.vocab.as_ref(), &model.policy)
            .map_err(harness_err)?;
        let cfg = dataset_config(scoring, &model, dataset, &embedded)?;
        let triples = score_embedded(dataset, &embedded, &cfg).map_err(harness_err)?;
        greedy = Some((triples, fingerprint(&model, &cfg)));
        provider = Some(model.fingerprint.clone());
    }
    let metrics = unique
        .iter()
        .map(|n| {
            let pick = |name: &str, f: fn(&ScoreTriple) -> f64| {
                let (t, fp) = greedy.as_ref().expect("greedy metrics scored");
                MetricUnderTest::new(name, fp.clone(), t.iter().map(|(k, v)| (k.clone(), f(v))).collect())
            };
            match n {
                MetricName::F => pick("F", |t| t.f1),
                MetricName::P => pick("P", |t| t.precision),
                MetricName::R => pick("R", |t| t.recall),
                MetricName::SentBleu => MetricUnderTest::sentence_bleu(dataset),
                MetricName::Human => MetricUnderTest::human(dataset),
            }
        })
        .collect();
    Ok(Evaluated { metrics, provider })
}

fn williams_for(a: &[f64], b: &[f64], human: &[f64]) -> Outcome<WilliamsResult> {
    let r = (|| {
        let r12 = pearson(a, human)?.abs();
        let r13 = pearson(b, human)?.abs();
        let r23 = pearson(a, b)?;
        williams_test(r12, r13, r23, human.len())
    })();
    r.into()
}

// ---------------------------------------------------------------- eval-segment

#[derive(Debug, Args, Serialize)]
pub struct EvalSegmentArgs {
    /// Segment corpus: TSV `id, system, reference, candidate, human_score`
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub metrics: MetricArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Bootstrap resamples per metric pair (0 disables the bootstrap)
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON report
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct MetricSegment {
    fingerprint: String,
    #[serde(flatten)]
    correlation: SegmentCorrelation,
}

#[derive(Serialize)]
struct PairSignificance {
    williams: Outcome<WilliamsResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap_p: Option<Reported>,
}

#[derive(Serialize)]
struct SegmentRow {
    system: String,
    id: String,
    human: f64,
    scores: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct SegmentBody {
    williams_convention: &'static str,
    n: usize,
    metrics: BTreeMap<String, MetricSegment>,
    significance: BTreeMap<String, PairSignificance>,
    segments: Vec<SegmentRow>,
}

pub fn eval_segment(a: &EvalSegmentArgs) -> CliResult<()> {
    let seed = if a.bootstrap > 0 {
        Some(require_seed(a.seed, "when --bootstrap is above 0")?)
    } else {
        a.seed
    };
    let dataset = read_dataset(&a.corpus)?;
    let ev = evaluate(&dataset, &a.metrics.metrics, &a.model, &a.scoring)?;
    let mut vectors = Vec::new();
    let mut metrics = BTreeMap::new();
    for m in &ev.metrics {
        let (keys, mv, hv) = judged_vectors(&dataset, m).map_err(harness_err)?;
        let correlation = segment_correlation(&dataset, m).map_err(harness_err)?;
        metrics.insert(
            m.name.clone(),
            MetricSegment {
                fingerprint: m.fingerprint.clone(),
                correlation,
            },
        );
        vectors.push((keys, mv, hv));
    }
    let (keys, _, human) = vectors[0].clone();
    let mut significance = BTreeMap::new();
    for (i, a_m) in ev.metrics.iter().enumerate() {
        for (j, b_m) in ev.metrics.iter().enumerate() {
            if i == j {
                continue;
            }
            let (va, vb) = (&vectors[i].1, &vectors[j].1);
            let bootstrap_p = seed
                .filter(|_| a.bootstrap > 0)
                .map(|s| Reported::from(bootstrap_compare(va, vb, &human, a.bootstrap, s)));
            significance.insert(
                format!("{}>{}", a_m.name, b_m.name),
                PairSignificance {
                    williams: williams_for(va, vb, &human),
                    bootstrap_p,
                },
            );
        }
    }
    let segments = keys
        .iter()
        .enumerate()
        .map(|(k, (s, id))| SegmentRow {
            system: s.clone(),
            id: id.clone(),
            human: human[k],
            scores: ev.metrics.iter().zip(&vectors).map(|(m, v)| (m.name.clone(), v.1[k])).collect(),
        })
        .collect();
    let body = SegmentBody {
        williams_convention: WILLIAMS_CONVENTION,
        n: keys.len(),
        metrics,
        significance,
        segments,
    };
    write_json(&a.out, &Report::new("eval-segment", a, ev.provider.as_deref(), seed, body))
}

// ---------------------------------------------------------------- eval-system

#[derive(Debug, Args, Serialize)]
pub struct EvalSystemArgs {
    /// Segment corpus: TSV `id, system, reference, candidate, human_score`
    #[arg(long)]
    pub corpus: PathBuf,
    /// System-level human scores: TSV `system, human_score`; defaults to the
    /// mean segment judgment of each system
    #[arg(long)]
    pub human_system: Option<PathBuf>,
    #[command(flatten)]
    pub metrics: MetricArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Hybrid systems to super-sample for an additional correlation (0 = none)
    #[arg(long, default_value_t = 0)]
    pub hybrids: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON report
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SystemRow {
    human: f64,
    scores: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct MetricSystem {
    fingerprint: String,
    system: Correlation,
    #[serde(skip_serializing_if = "Option::is_none")]
    hybrid: Option<Outcome<Correlation>>,
}

#[derive(Serialize)]
struct SystemBody {
    williams_convention: &'static str,
    n_systems: usize,
    hybrids: usize,
    systems: BTreeMap<String, SystemRow>,
    metrics: BTreeMap<String, MetricSystem>,
    significance: BTreeMap<String, Outcome<WilliamsResult>>,
}

pub fn eval_system(a: &EvalSystemArgs) -> CliResult<()> {
    let seed = if a.hybrids > 0 {
        Some(require_seed(a.seed, "when --hybrids is above 0")?)
    } else {
        a.seed
    };
    let mut dataset = read_dataset(&a.corpus)?;
    if let Some(p) = &a.human_system {
        dataset
            .read_human_system(open(p)?)
            .map_err(|e| invalid(format!("{}: {e}", p.display())))?;
    }
    let ev = evaluate(&dataset, &a.metrics.metrics, &a.model, &a.scoring)?;
    let names = dataset.system_names();
    let human_metric = MetricUnderTest::human(&dataset);
    let human: Vec<f64> = names
        .iter()
        .map(|s| match &dataset.human_system {
            Some(h) => h
                .get(*s)
                .copied()
                .ok_or_else(|| invalid(format!("no system-level human score for {s:?}"))),
            None => system_score(&dataset, s, &human_metric)
                .map_err(|e| invalid(format!("system {s:?} lacks segment judgments ({e}); pass --human-system"))),
        })
        .collect::<CliResult<_>>()?;
    let mut scores: Vec<Vec<f64>> = Vec::new();
    for m in &ev.metrics {
        scores.push(
            names
                .iter()
                .map(|s| system_score(&dataset, s, m))
                .collect::<Result<_, _>>()
                .map_err(harness_err)?,
        );
    }
    let hybrids = match seed {
        Some(s) if a.hybrids > 0 => Some(hybrid_supersample(&dataset, a.hybrids, s).map_err(harness_err)?),
        _ => None,
    };
    let mut metrics = BTreeMap::new();
    for (m, sc) in ev.metrics.iter().zip(&scores) {
        let hybrid = hybrids.as_ref().map(|hs| {
            let r: Result<Correlation, embedscore::HarnessError> = (|| {
                let ms = hs.iter().map(|h| h.score(m)).collect::<Result<Vec<_>, _>>()?;
                let hh: Vec<f64> = hs.iter().map(|h| h.human_score).collect();
                Ok(Correlation::of(&ms, &hh))
            })();
            Outcome::from(r)
        });
        metrics.insert(
            m.name.clone(),
            MetricSystem {
                fingerprint: m.fingerprint.clone(),
                system: Correlation::of(sc, &human),
                hybrid,
            },
        );
    }
    let mut significance = BTreeMap::new();
    for (i, am) in ev.metrics.iter().enumerate() {
        for (j, bm) in ev.metrics.iter().enumerate() {
            if i != j {
                significance.insert(format!("{}>{}", am.name, bm.name), williams_for(&scores[i], &scores[j], &human));
            }
        }
    }
    let systems = names
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let row = SystemRow {
                human: human[k],
                scores: ev.metrics.iter().zip(&scores).map(|(m, v)| (m.name.clone(), v[k])).collect(),
            };
            (s.to_string(), row)
        })
        .collect();
    let body = SystemBody {
        williams_convention: WILLIAMS_CONVENTION,
        n_systems: names.len(),
        hybrids: a.hybrids,
        systems,
        metrics,
        significance,
    };
    write_json(&a.out, &Report::new("eval-system", a, ev.provider.as_deref(), seed, body))
}

// ---------------------------------------------------------------- model-select

#[derive(Debug, Args, Serialize)]
pub struct ModelSelectArgs {
    /// Segment corpus: TSV `id, system, reference, candidate, human_score`
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub metrics: MetricArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Hybrid systems generated
    #[arg(long, default_value_t = 10_000)]
    pub hybrids: usize,
    /// Hybrids drawn per trial
    #[arg(long, default_value_t = 100)]
    pub sample: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON report
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SelectionBody {
    metrics: BTreeMap<String, Outcome<ModelSelectionReport>>,
}

pub fn model_select(a: &ModelSelectArgs) -> CliResult<()> {
    let seed = require_seed(a.seed, "for model-select")?;
    if a.sample > a.hybrids {
        return Err(invalid(format!("--sample {} exceeds --hybrids {}", a.sample, a.hybrids)));
    }
    let dataset = read_dataset(&a.corpus)?;
    let ev = evaluate(&dataset, &a.metrics.metrics, &a.model, &a.scoring)?;
    let hybrids = hybrid_supersample(&dataset, a.hybrids, seed).map_err(harness_err)?;
    let metrics = ev
        .metrics
        .iter()
        .map(|m| {
            let r = model_selection(&hybrids, m, a.trials, a.sample, seed);
            if let Err(e @ (embedscore::HarnessError::SampleTooLarge { .. } | embedscore::HarnessError::EmptySample)) = &r {
                return Err(invalid(e));
            }
            Ok((m.name.clone(), Outcome::from(r)))
        })
        .collect::<CliResult<_>>()?;
    write_json(
        &a.out,
        &Report::new("model-select", a, ev.provider.as_deref(), Some(seed), SelectionBody { metrics }),
    )
}

// ---------------------------------------------------------------- ablation

#[derive(Debug, Args, Serialize)]
pub struct AblationArgs {
    /// Segment corpus: TSV `id, system, reference, candidate, human_score`
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Flag sets to compare, e.g. vanilla,IDF-S+SEP,IDF-L+SEP+PMEANS+RM
    /// (default: every set that needs no large corpus)
    #[arg(long, value_delimiter = ',')]
    pub flags: Vec<String>,
    /// Larger reference corpus for IDF-L: TSV `id, text`
    #[arg(long)]
    pub large_corpus: Option<PathBuf>,
    /// Output JSON report
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct AblationBody {
    n: usize,
    rows: BTreeMap<String, AblationRow>,
}

pub fn ablation(a: &AblationArgs) -> CliResult<()> {
    let flag_sets: Vec<FlagSet> = if a.flags.is_empty() {
        FlagSet::standard()
    } else {
        a.flags
            .iter()
            .map(|f| f.parse().invalid(format!("flag set {f:?}")))
            .collect::<CliResult<_>>()?
    };
    let dataset = read_dataset(&a.corpus)?;
    let model = a.model.load()?;
    let vocab = model.vocab.as_ref();
    let segments = dataset
        .judged_segments()
        .par_iter()
        .map(|(s, id)| {
            let r = model
                .provider
                .record(&reference_key(id), &dataset.references[id], vocab)
                .map_err(embed_err)?;
            let c = model
                .provider
                .record(&candidate_key(s, id), &dataset.systems[s][id], vocab)
                .map_err(embed_err)?;
            Ok(AblationSegment {
                reference: r,
                candidate: c,
                human: dataset.human_segment[&(s.to_string(), id.to_string())],
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let large_corpus = match &a.large_corpus {
        Some(p) => Some(
            read_sentences(p)?
                .iter()
                .map(|(_, t)| match vocab {
                    Some(v) => tokenize(t, v),
                    None => TokenSequence::from_words(t),
                })
                .collect(),
        ),
        None => None,
    };
    let pmeans_layers = if a.model.pmeans.is_empty() {
        (0..=a.model.layer).collect()
    } else {
        a.model.pmeans.clone()
    };
    let setup = AblationSetup {
        large_corpus,
        layer: LayerPolicy::Single(a.model.layer),
        pmeans: LayerPolicy::pmeans(pmeans_layers),
    };
    let rows = compare_matching(&segments, &setup, &flag_sets).runtime("ablation")?;
    let body = AblationBody { n: segments.len(), rows };
    write_json(&a.out, &Report::new("ablation", a, Some(&model.fingerprint), None, body))
}

// ---------------------------------------------------------------- layer-sweep

#[derive(Debug, Args, Serialize)]
pub struct LayerSweepArgs {
    /// Segment corpus: TSV `id, system, reference, candidate, human_score`
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Layers to evaluate: a range `0-12` or a list `2,4,6`
    #[arg(long)]
    pub layers: String,
    /// Output JSON report
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

fn parse_layers(s: &str) -> CliResult<Vec<usize>> {
    let bad = || invalid(format!("invalid layer list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = lo.trim().parse().map_err(|_| bad())?;
                let hi: usize = hi.trim().parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(bad());
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct SweepBody {
    n: usize,
    #[serde(flatten)]
    sweep: LayerSweep,
}

pub fn layer_sweep_cmd(a: &LayerSweepArgs) -> CliResult<()> {
    let layers = parse_layers(&a.layers)?;
    let dataset = read_dataset(&a.corpus)?;
    let model = a.model.load()?;
    let EmbeddingProvider::Precomputed(store) = &model.provider else {
        return Err(invalid("layer-sweep needs a precomputed provider"));
    };
    let tokens = |k: String| store.get(&k).map(|r| r.tokens.clone());
    let refs: Vec<TokenSequence> = dataset.references.keys().filter_map(|id| tokens(reference_key(id))).collect();
    let cands: Vec<TokenSequence> = dataset
        .segments()
        .iter()
        .filter_map(|(s, id)| tokens(candidate_key(s, id)))
        .collect();
    let cfg = a.scoring.config(&model, &refs, &cands)?;
    let sweep = layer_sweep(&dataset, store, &layers, &cfg).map_err(harness_err)?;
    let body = SweepBody {
        n: dataset.judged_segments().len(),
        sweep,
    };
    write_json(&a.out, &Report::new("layer-sweep", a, Some(&model.fingerprint), None, body))
}

// ---------------------------------------------------------------- auc

#[derive(Debug, Args, Serialize)]
pub struct AucArgs {
    /// Labeled pairs: TSV `id, sentence1, sentence2, label` (label 0 or 1);
    /// sentence1 is the reference
    #[arg(long)]
    pub pairs: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Score used for ranking: F, P, R or sentbleu
    #[arg(long, value_enum, default_value_t = MetricName::F)]
    pub metric: MetricName,
    /// Output JSON report
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct PairScore {
    id: String,
    label: bool,
    score: f64,
}

#[derive(Serialize)]
struct AucBody {
    metric: MetricName,
    auc: f64,
    n: usize,
    positives: usize,
    pairs: Vec<PairScore>,
}

pub fn auc(a: &AucArgs) -> CliResult<()> {
    if a.metric == MetricName::Human {
        return Err(invalid("paraphrase pairs carry no human scores"));
    }
    let pairs = read_paraphrases(open(&a.pairs)?).map_err(|e| invalid(format!("{}: {e}", a.pairs.display())))?;
    let (result, provider) = if a.metric == MetricName::SentBleu {
        let r = paraphrase_auc(&pairs, |p| Ok::<_, embedscore::HarnessError>(bleu(&p.sentence2, &p.sentence1)));
        (r, None)
    } else {
        let model = a.model.load()?;
        let mut sentences = Vec::with_capacity(pairs.len() * 2);
        for p in &pairs {
            let (k1, k2) = p.keys();
            sentences.push((k1, p.sentence1.clone()));
            sentences.push((k2, p.sentence2.clone()));
        }
        let embedded = model
            .provider
            .embed_batch(&sentences, model.vocab.as_ref(), &model.policy)
            .map_err(embed_err)?;
        let refs: Vec<TokenSequence> = embedded.iter().step_by(2).map(|e| e.tokens.clone()).collect();
        let cands: Vec<TokenSequence> = embedded.iter().skip(1).step_by(2).map(|e| e.tokens.clone()).collect();
        let cfg = a.scoring.config(&model, &refs, &cands)?;
        let index: BTreeMap<&str, usize> = pairs.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
        let metric = a.metric;
        let r = paraphrase_auc(&pairs, |p| {
            let i = index[p.id.as_str()];
            let t = score_pair(&embedded[2 * i], &embedded[2 * i + 1], &cfg)?;
            Ok::<_, embedscore::HarnessError>(match metric {
                MetricName::P => t.precision,
                MetricName::R => t.recall,
                _ => t.f1,
            })
        });
        (r, Some(model.fingerprint))
    };
    let (auc, scores) = result.map_err(harness_err)?;
    let body = AucBody {
        metric: a.metric,
        auc,
        n: pairs.len(),
        positives: pairs.iter().filter(|p| p.label).count(),
        pairs: pairs
            .iter()
            .zip(scores)
            .map(|(p, score)| PairScore {
                id: p.id.clone(),
                label: p.label,
                score,
            })
            .collect(),
    };
    write_json(&a.out, &Report::new("auc", a, provider.as_deref(), None, body))
}
