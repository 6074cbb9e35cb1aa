//! Contextual-embedding similarity scoring for text generation.
//!
//! Candidate and reference sentences are tokenized into word pieces, embedded
//! through a pluggable [`EmbeddingProvider`], and compared by greedy cosine
//! matching to produce precision, recall and F1 ([`ScoreTriple`]). Optional
//! idf importance weighting and baseline rescaling are supported.
//!
//! The crate also carries exact-match n-gram baselines ([`ngram`]),
//! optimal-transport ablations ([`transport`]), correlation and significance
//! statistics ([`stats`]) and the experiment drivers used to evaluate metrics
//! against human judgments ([`harness`]).

pub mod embeddings;
pub mod harness;
pub mod idf;
pub mod matrix;
pub mod ngram;
pub mod rng;
pub mod scorer;
pub mod stats;
pub mod tokenizer;
pub mod transport;

pub use embeddings::{
    EmbeddedSentence, EmbeddingError, EmbeddingMatrix, EmbeddingProvider, EmbeddingRecord,
    LayerPolicy, LayerStack, PrecomputedStore, RemoteClient, StaticTable, UnknownPolicy,
};
pub use harness::{
    HarnessError, HybridSystem, MetricUnderTest, ModelSelectionReport, SegmentDataset,
};
pub use idf::{IdfError, IdfPair, IdfTable, IdfVariant};
pub use matrix::Matrix;
pub use scorer::{RescaleBaseline, ScoreConfig, ScoreError, ScoreTriple, SimilarityMatrix};
pub use stats::{StatsError, WilliamsResult};
pub use tokenizer::{FilterPolicy, TokenSequence, Vocabulary, VocabularyError};
pub use transport::{TransportError, TransportPlan, TransportProblem};

/// Version tag embedded in every report and output document.
pub const FORMAT_VERSION: &str = "1.0";
