//! WordPiece tokenization and token filtering.
//!
//! Words are found by splitting on Unicode whitespace. Each word is then cut
//! greedily, longest match first, against the vocabulary; non-initial pieces
//! carry the continuation prefix (`##` by default). A word that cannot be
//! segmented, or that is longer than `max_word_chars`, becomes a single
//! unknown piece. No case folding or accent stripping happens here: that is
//! the vocabulary supplier's business.

use std::collections::HashMap;
use std::io::BufRead;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

pub const DEFAULT_CONTINUATION_PREFIX: &str = "##";
pub const DEFAULT_UNKNOWN_PIECE: &str = "[UNK]";
pub const DEFAULT_MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabularyError {
    #[error("vocabulary is empty")]
    Empty,
    #[error("unknown piece {0:?} is not in the vocabulary")]
    MissingUnknownPiece(String),
    #[error("continuation prefix must not be empty")]
    EmptyPrefix,
    #[error("max_word_chars must be positive")]
    ZeroMaxWordChars,
    #[error("failed to read vocabulary: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabularyConfig {
    pub continuation_prefix: String,
    pub unknown_piece: String,
    pub max_word_chars: usize,
}

impl Default for VocabularyConfig {
    fn default() -> Self {
        Self {
            continuation_prefix: DEFAULT_CONTINUATION_PREFIX.to_string(),
            unknown_piece: DEFAULT_UNKNOWN_PIECE.to_string(),
            max_word_chars: DEFAULT_MAX_WORD_CHARS,
        }
    }
}

/// An immutable word-piece inventory. Piece ids are insertion positions
/// (line numbers when loaded from a file).
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pieces: Vec<String>,
    ids: HashMap<String, usize>,
    config: VocabularyConfig,
}

impl Vocabulary {
    pub fn new<I, S>(pieces: I) -> Result<Self, VocabularyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_config(pieces, VocabularyConfig::default())
    }

    pub fn with_config<I, S>(pieces: I, config: VocabularyConfig) -> Result<Self, VocabularyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if config.continuation_prefix.is_empty() {
            return Err(VocabularyError::EmptyPrefix);
        }
        if config.max_word_chars == 0 {
            return Err(VocabularyError::ZeroMaxWordChars);
        }
        let pieces: Vec<String> = pieces.into_iter().map(Into::into).collect();
        if pieces.is_empty() {
            return Err(VocabularyError::Empty);
        }
        let mut ids = HashMap::with_capacity(pieces.len());
        for (id, p) in pieces.iter().enumerate() {
            ids.entry(p.clone()).or_insert(id);
        }
        if !ids.contains_key(&config.unknown_piece) {
            return Err(VocabularyError::MissingUnknownPiece(config.unknown_piece));
        }
        Ok(Self {
            pieces,
            ids,
            config,
        })
    }

    /// Reads one piece per line. Only the line terminator is removed.
    pub fn from_reader<R: BufRead>(
        reader: R,
        config: VocabularyConfig,
    ) -> Result<Self, VocabularyError> {
        let mut pieces = Vec::new();
        for line in reader.split(b'\n') {
            let bytes = line.map_err(|e| VocabularyError::Io(e.to_string()))?;
            let piece = String::from_utf8(bytes).map_err(|e| VocabularyError::Io(e.to_string()))?;
            pieces.push(piece);
        }
        Self::with_config(pieces, config)
    }

    pub fn contains(&self, piece: &str) -> bool {
        self.ids.contains_key(piece)
    }

    pub fn id(&self, piece: &str) -> Option<usize> {
        self.ids.get(piece).copied()
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn config(&self) -> &VocabularyConfig {
        &self.config
    }

    pub fn continuation_prefix(&self) -> &str {
        &self.config.continuation_prefix
    }

    pub fn unknown_piece(&self) -> &str {
        &self.config.unknown_piece
    }

    /// Greedy longest-match-first segmentation of one word.
    /// `None` when some suffix of the word has no matching piece.
    fn segment_word(&self, word: &str) -> Option<Vec<String>> {
        let bounds: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        let prefix = self.continuation_prefix();
        let mut out = Vec::new();
        let mut start = 0; // index into bounds
        let last = bounds.len() - 1;
        let mut candidate = String::new();
        while start < last {
            let mut found = None;
            for end in (start + 1..=last).rev() {
                candidate.clear();
                if start > 0 {
                    candidate.push_str(prefix);
                }
                candidate.push_str(&word[bounds[start]..bounds[end]]);
                if self.contains(&candidate) {
                    found = Some(end);
                    break;
                }
            }
            let end = found?;
            out.push(candidate.clone());
            start = end;
        }
        Some(out)
    }
}

/// A tokenized sentence: pieces plus the word each piece came from and
/// whether it continues the previous piece's word.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pieces: Vec<String>,
    word_index: Vec<usize>,
    is_continuation: Vec<bool>,
}

impl TokenSequence {
    /// Validating constructor. Returns `None` if the lists differ in length
    /// or `word_index` decreases.
    pub fn from_parts(
        pieces: Vec<String>,
        word_index: Vec<usize>,
        is_continuation: Vec<bool>,
    ) -> Option<Self> {
        if pieces.len() != word_index.len() || pieces.len() != is_continuation.len() {
            return None;
        }
        if word_index.windows(2).any(|w| w[1] < w[0]) {
            return None;
        }
        Some(Self {
            pieces,
            word_index,
            is_continuation,
        })
    }

    /// Rebuilds word metadata from bare pieces: a piece starting with
    /// `continuation_prefix` continues the current word, anything else opens a
    /// new one.
    pub fn from_pieces<S: Into<String>>(
        pieces: impl IntoIterator<Item = S>,
        continuation_prefix: &str,
    ) -> Self {
        let mut seq = Self::default();
        let mut word: Option<usize> = None;
        for p in pieces {
            let p: String = p.into();
            let cont = word.is_some() && is_continuation_piece(&p, continuation_prefix);
            let w = match (word, cont) {
                (Some(w), true) => w,
                (Some(w), false) => w + 1,
                (None, _) => 0,
            };
            word = Some(w);
            seq.pieces.push(p);
            seq.word_index.push(w);
            seq.is_continuation.push(cont);
        }
        seq
    }

    /// One piece per whitespace-delimited word.
    pub fn from_words(text: &str) -> Self {
        let pieces: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let n = pieces.len();
        Self {
            pieces,
            word_index: (0..n).collect(),
            is_continuation: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn word_index(&self) -> &[usize] {
        &self.word_index
    }

    pub fn is_continuation(&self) -> &[bool] {
        &self.is_continuation
    }

    /// Joins pieces back into words (prefix stripped), words separated by a
    /// single space.
    pub fn reconstruct_text(&self, continuation_prefix: &str) -> String {
        let mut out = String::new();
        for (i, p) in self.pieces.iter().enumerate() {
            if self.is_continuation[i] {
                out.push_str(p.strip_prefix(continuation_prefix).unwrap_or(p));
            } else {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(p);
            }
        }
        out
    }
}

fn is_continuation_piece(piece: &str, prefix: &str) -> bool {
    piece.len() > prefix.len() && piece.starts_with(prefix)
}

/// Splits `text` into word pieces.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> TokenSequence {
    let mut seq = TokenSequence::default();
    for (w, word) in text.split_whitespace().enumerate() {
        let pieces = if word.chars().count() > vocab.config.max_word_chars {
            None
        } else {
            vocab.segment_word(word)
        };
        match pieces {
            Some(pieces) => {
                for (k, p) in pieces.into_iter().enumerate() {
                    seq.pieces.push(p);
                    seq.word_index.push(w);
                    seq.is_continuation.push(k > 0);
                }
            }
            None => {
                seq.pieces.push(vocab.unknown_piece().to_string());
                seq.word_index.push(w);
                seq.is_continuation.push(false);
            }
        }
    }
    seq
}

/// Token exclusion classes applied before matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterPolicy {
    /// Drop pieces made only of Unicode punctuation (general category P*).
    pub punctuation: bool,
    /// Drop non-initial sub-word pieces.
    pub continuation: bool,
    pub continuation_prefix: String,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self::none()
    }
}

impl FilterPolicy {
    pub fn none() -> Self {
        Self {
            punctuation: false,
            continuation: false,
            continuation_prefix: DEFAULT_CONTINUATION_PREFIX.to_string(),
        }
    }

    /// Punctuation and continuation pieces both removed.
    pub fn remove_all() -> Self {
        Self {
            punctuation: true,
            continuation: true,
            ..Self::none()
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.punctuation && !self.continuation
    }

    pub fn name(&self) -> &'static str {
        match (self.punctuation, self.continuation) {
            (false, false) => "none",
            (true, false) => "punct",
            (false, true) => "subword",
            (true, true) => "punct+subword",
        }
    }
}

fn punctuation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\p{P}+$").expect("static regex"))
}

pub fn is_filtered(piece: &str, policy: &FilterPolicy) -> bool {
    (policy.punctuation && punctuation_re().is_match(piece))
        || (policy.continuation && is_continuation_piece(piece, &policy.continuation_prefix))
}

/// Indices of pieces that survive `policy`.
pub fn surviving_indices(tokens: &TokenSequence, policy: &FilterPolicy) -> Vec<usize> {
    tokens
        .pieces()
        .iter()
        .enumerate()
        .filter(|(_, p)| !is_filtered(p, policy))
        .map(|(i, _)| i)
        .collect()
}
