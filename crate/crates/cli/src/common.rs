//! Plumbing shared by the subcommands: error classes, provider loading,
//! input parsing and atomic report output.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::anyhow;
use clap::{Args, ValueEnum};
use embedscore::embeddings::{EmbeddingError, EmbeddingProvider, PrecomputedStore, RemoteClient, StaticTable, UnknownPolicy};
use embedscore::harness::{dataset_tokens, HarnessError, SegmentDataset};
use embedscore::idf::{build_idf, IdfPair, IdfTable};
use embedscore::scorer::{RescaleBaseline, ScoreConfig};
use embedscore::{EmbeddedSentence, FilterPolicy, LayerPolicy, TokenSequence, Vocabulary, FORMAT_VERSION};
use serde::Serialize;

/// Failure class, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or inputs (exit 2).
    Validation(anyhow::Error),
    /// Anything that went wrong after inputs were accepted (exit 1).
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(e) => write!(f, "invalid input: {e:#}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid(msg: impl Display) -> CliError {
    CliError::Validation(anyhow!("{msg}"))
}

pub trait ResultExt<T> {
    fn invalid(self, context: impl Display) -> CliResult<T>;
    fn runtime(self, context: impl Display) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn invalid(self, context: impl Display) -> CliResult<T> {
        self.map_err(|e| CliError::Validation(e.into().context(context.to_string())))
    }

    fn runtime(self, context: impl Display) -> CliResult<T> {
        self.map_err(|e| CliError::Runtime(e.into().context(context.to_string())))
    }
}

/// Harness errors caused by the input data are validation failures.
pub fn harness_err(e: HarnessError) -> CliError {
    match e {
        HarnessError::Io(_)
        | HarnessError::Header { .. }
        | HarnessError::Row { .. }
        | HarnessError::Coverage(_)
        | HarnessError::EmptyDataset
        | HarnessError::UnknownSystem(_)
        | HarnessError::MissingJudgments { .. }
        | HarnessError::SampleTooLarge { .. }
        | HarnessError::EmptySample
        | HarnessError::IncompleteStacks(_) => CliError::Validation(e.into()),
        HarnessError::Embedding(inner) => embed_err(inner),
        other => CliError::Runtime(other.into()),
    }
}

/// Sentences the provider does not know, or knows with different tokens,
/// are input errors; an unreachable service is a runtime error.
pub fn embed_err(e: EmbeddingError) -> CliError {
    match e {
        EmbeddingError::MissingSentence(_) | EmbeddingError::TokenMismatch { .. } | EmbeddingError::LayerOutOfRange { .. } => {
            CliError::Validation(e.into())
        }
        other => CliError::Runtime(other.into()),
    }
}

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .invalid(format!("cannot open {}", path.display()))
}

pub fn read_dataset(path: &Path) -> CliResult<SegmentDataset> {
    SegmentDataset::from_tsv(open(path)?)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn read_sentences(path: &Path) -> CliResult<Vec<(String, String)>> {
    embedscore::harness::read_sentences(open(path)?)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterArg {
    None,
    Punct,
    Subword,
    All,
}

impl FilterArg {
    pub fn policy(self) -> FilterPolicy {
        let mut p = FilterPolicy::none();
        p.punctuation = matches!(self, Self::Punct | Self::All);
        p.continuation = matches!(self, Self::Subword | Self::All);
        p
    }
}

/// Embedding source and layer handling.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Embedding provider: static:<table.jsonl>, precomputed:<records.jsonl>
    /// or remote:<url>
    #[arg(long)]
    pub provider: Option<String>,
    /// WordPiece vocabulary (one piece per line) for the static provider;
    /// without it each whitespace-delimited word is one piece
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Layer whose embeddings are scored
    #[arg(long, default_value_t = 0)]
    pub layer: usize,
    /// Aggregate these layers with power means {1, +inf, -inf} instead of
    /// using --layer (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub pmeans: Vec<usize>,
    /// Tokens excluded before matching
    #[arg(long, value_enum, default_value_t = FilterArg::None)]
    pub filter: FilterArg,
    /// Seed of the pseudo-random vectors given to pieces missing from a
    /// static table
    #[arg(long, default_value_t = 0)]
    pub unk_seed: u64,
    /// Remote provider timeout in seconds
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
}

pub struct Model {
    pub provider: EmbeddingProvider,
    pub vocab: Option<Vocabulary>,
    pub policy: LayerPolicy,
    pub filter: FilterPolicy,
    pub fingerprint: String,
}

impl ModelArgs {
    pub fn policy(&self) -> LayerPolicy {
        if self.pmeans.is_empty() {
            LayerPolicy::Single(self.layer)
        } else {
            LayerPolicy::pmeans(self.pmeans.clone())
        }
    }

    pub fn load(&self) -> CliResult<Model> {
        let policy = self.policy();
        let spec = self.provider.as_deref().ok_or_else(|| invalid("--provider is required"))?;
        let (kind, target) = spec
            .split_once(':')
            .ok_or_else(|| invalid(format!("provider {spec:?} is not of the form kind:target")))?;
        let provider = match kind {
            "static" => {
                if policy.max_layer() > 0 {
                    return Err(invalid("a static provider has a single layer (0)"));
                }
                let path = Path::new(target);
                let table = StaticTable::from_jsonl(open(path)?, UnknownPolicy::SeededHash { seed: self.unk_seed })
                    .invalid(format!("{}", path.display()))?;
                EmbeddingProvider::Static(table)
            }
            "precomputed" => {
                let path = Path::new(target);
                let store = PrecomputedStore::from_jsonl(open(path)?).invalid(format!("{}", path.display()))?;
                EmbeddingProvider::Precomputed(store)
            }
            "remote" => {
                let layers = (0..=policy.max_layer()).collect();
                EmbeddingProvider::Remote(RemoteClient::new(
                    target,
                    Duration::from_secs(self.timeout_secs),
                    layers,
                ))
            }
            other => return Err(invalid(format!("unknown provider kind {other:?}"))),
        };
        let vocab = match &self.vocab {
            Some(p) => Some(Vocabulary::from_reader(open(p)?, Default::default()).invalid(format!("{}", p.display()))?),
            None => None,
        };
        let fingerprint = provider.fingerprint();
        log::info!("provider {fingerprint}, layers {}", policy.describe());
        Ok(Model {
            provider,
            vocab,
            policy,
            filter: self.filter.policy(),
            fingerprint,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdfArg {
    /// Uniform weights
    None,
    /// Reference idf shared by both sides
    Small,
    /// Reference idf for recall, candidate idf for precision
    Separate,
}

/// Importance weighting and rescaling.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoringArgs {
    /// Idf weighting computed from the run's own sentences
    #[arg(long, value_enum, default_value_t = IdfArg::None)]
    pub idf: IdfArg,
    /// Precomputed idf table (from the idf command) used for both sides
    #[arg(long, conflicts_with = "idf")]
    pub idf_table: Option<PathBuf>,
    /// Rescaling baseline written by the baseline command
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

impl ScoringArgs {
    pub fn baseline(&self) -> CliResult<Option<RescaleBaseline>> {
        let Some(path) = &self.baseline else {
            return Ok(None);
        };
        let v: serde_json::Value =
            serde_json::from_reader(open(path)?).invalid(format!("{}", path.display()))?;
        let inner = v.get("baseline").cloned().unwrap_or(v);
        let b: RescaleBaseline = serde_json::from_value(inner).invalid(format!("{}", path.display()))?;
        b.validate().invalid(format!("{}", path.display()))?;
        Ok(Some(b))
    }

    pub fn idf(&self, refs: &[TokenSequence], cands: &[TokenSequence]) -> CliResult<Option<IdfPair>> {
        if let Some(path) = &self.idf_table {
            let t = IdfTable::read_jsonl(open(path)?).invalid(format!("{}", path.display()))?;
            return Ok(Some(IdfPair::shared(t)));
        }
        let build = |s: &[TokenSequence]| build_idf(s).invalid("idf corpus");
        Ok(match self.idf {
            IdfArg::None => None,
            IdfArg::Small => Some(IdfPair::shared(build(refs)?)),
            IdfArg::Separate => Some(IdfPair {
                reference: build(refs)?,
                candidate: build(cands)?,
            }),
        })
    }

    /// Full scoring configuration given the run's token sequences.
    pub fn config(&self, model: &Model, refs: &[TokenSequence], cands: &[TokenSequence]) -> CliResult<ScoreConfig> {
        Ok(ScoreConfig {
            idf: self.idf(refs, cands)?,
            filter: model.filter.clone(),
            layer: model.policy.clone(),
            baseline: self.baseline()?,
        })
    }
}

/// Scoring config for a segment corpus that has already been embedded.
pub fn dataset_config(
    scoring: &ScoringArgs,
    model: &Model,
    dataset: &SegmentDataset,
    embedded: &std::collections::BTreeMap<String, EmbeddedSentence>,
) -> CliResult<ScoreConfig> {
    let (refs, cands) = dataset_tokens(dataset, embedded);
    scoring.config(model, &refs, &cands)
}

/// Top-level report fields shared by every command.
#[derive(Serialize)]
pub struct Report<'a, C: Serialize, B: Serialize> {
    pub format_version: &'static str,
    pub command: &'static str,
    pub config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provider: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub body: B,
}

impl<'a, C: Serialize, B: Serialize> Report<'a, C, B> {
    pub fn new(command: &'static str, config: &'a C, provider: Option<&'a str>, seed: Option<u64>, body: B) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            command,
            config,
            provider,
            seed,
            body,
        }
    }
}

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).runtime(format!("cannot write to {}", dir.display()))?;
    tmp.write_all(bytes).runtime("write failed")?;
    tmp.as_file().sync_all().runtime("sync failed")?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .runtime(format!("cannot create {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).runtime("serialization failed")?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn require_seed(seed: Option<u64>, why: &str) -> CliResult<u64> {
    seed.ok_or_else(|| invalid(format!("--seed is required {why}")))
}
