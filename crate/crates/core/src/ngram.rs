//! Exact-match n-gram baselines: Exact-P/R, corpus BLEU and smoothed
//! sentence BLEU (single reference).

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NGramError {
    #[error("no {side} {order}-grams")]
    EmptyBag { side: &'static str, order: usize },
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Multiset of the n-grams of one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramBag<'a> {
    order: usize,
    counts: HashMap<&'a [String], usize>,
}

impl<'a> NGramBag<'a> {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn count(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn contains(&self, gram: &[String]) -> bool {
        self.counts.contains_key(gram)
    }

    /// Total number of n-grams, with multiplicity.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a [String], usize)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }

    /// Matches with each reference n-gram usable at most as often as it
    /// occurs there.
    pub fn clipped_matches(&self, reference: &NGramBag<'_>) -> usize {
        self.iter().map(|(g, c)| c.min(reference.count(g))).sum()
    }
}

/// Sliding-window n-grams with multiplicity. `n` must be at least 1.
pub fn ngram_bag(tokens: &[String], n: usize) -> NGramBag<'_> {
    let mut counts = HashMap::new();
    if n > 0 {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    NGramBag { order: n, counts }
}

/// Exact-match precision and recall of order `n`: the share of candidate
/// n-gram occurrences whose n-gram appears anywhere in the reference, and
/// vice versa. No clipping.
pub fn exact_pr(candidate: &[String], reference: &[String], n: usize) -> Result<(f64, f64), NGramError> {
    if n == 0 {
        return Err(NGramError::ZeroOrder);
    }
    let c = ngram_bag(candidate, n);
    let r = ngram_bag(reference, n);
    if c.is_empty() {
        return Err(NGramError::EmptyBag { side: "candidate", order: n });
    }
    if r.is_empty() {
        return Err(NGramError::EmptyBag { side: "reference", order: n });
    }
    let hits = |a: &NGramBag, b: &NGramBag| -> usize {
        a.iter().filter(|(g, _)| b.contains(g)).map(|(_, c)| c).sum()
    };
    Ok((
        hits(&c, &r) as f64 / c.total() as f64,
        hits(&r, &c) as f64 / r.total() as f64,
    ))
}

pub fn brevity_penalty(candidate_len: usize, reference_len: usize) -> f64 {
    if candidate_len >= reference_len {
        1.0
    } else if candidate_len == 0 {
        0.0
    } else {
        (1.0 - reference_len as f64 / candidate_len as f64).exp()
    }
}

/// Per-order clipped precision smoothing for sentence BLEU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    /// `(matches + 1) / (total + 1)` for every order.
    #[default]
    AddOne,
    /// Plain BLEU; equals `corpus_bleu` on the single pair.
    None,
}

#[derive(Debug, Default, Clone)]
struct Stats {
    matches: Vec<usize>,
    totals: Vec<usize>,
    cand_len: usize,
    ref_len: usize,
}

fn accumulate(stats: &mut Stats, candidate: &[String], reference: &[String], max_n: usize) {
    stats.cand_len += candidate.len();
    stats.ref_len += reference.len();
    for n in 1..=max_n {
        let c = ngram_bag(candidate, n);
        let r = ngram_bag(reference, n);
        stats.matches[n - 1] += c.clipped_matches(&r);
        stats.totals[n - 1] += c.total();
    }
}

fn combine(stats: &Stats, smoothing: Smoothing) -> f64 {
    let mut log_sum = 0.0;
    for (&m, &t) in stats.matches.iter().zip(&stats.totals) {
        let (num, den) = match smoothing {
            Smoothing::AddOne => (m as f64 + 1.0, t as f64 + 1.0),
            Smoothing::None => (m as f64, t as f64),
        };
        if num == 0.0 || den == 0.0 {
            return 0.0;
        }
        log_sum += (num / den).ln();
    }
    let max_n = stats.matches.len() as f64;
    (log_sum / max_n).exp() * brevity_penalty(stats.cand_len, stats.ref_len)
}

/// Corpus BLEU over `(candidate, reference)` pairs: clipped matches and
/// n-gram totals are summed over the corpus per order, the geometric mean of
/// the `max_n` precisions is taken, and the brevity penalty uses the total
/// lengths. Any order with zero matches gives 0.
pub fn corpus_bleu<C, R>(pairs: &[(C, R)], max_n: usize) -> Result<f64, NGramError>
where
    C: AsRef<[String]>,
    R: AsRef<[String]>,
{
    if max_n == 0 {
        return Err(NGramError::ZeroOrder);
    }
    if pairs.is_empty() {
        return Err(NGramError::EmptyCorpus);
    }
    let mut stats = Stats {
        matches: vec![0; max_n],
        totals: vec![0; max_n],
        ..Default::default()
    };
    for (c, r) in pairs {
        accumulate(&mut stats, c.as_ref(), r.as_ref(), max_n);
    }
    Ok(combine(&stats, Smoothing::None))
}

/// Sentence-level BLEU with the given smoothing.
pub fn sentence_bleu(candidate: &[String], reference: &[String], max_n: usize, smoothing: Smoothing) -> f64 {
    if max_n == 0 {
        return 0.0;
    }
    let mut stats = Stats {
        matches: vec![0; max_n],
        totals: vec![0; max_n],
        ..Default::default()
    };
    accumulate(&mut stats, candidate, reference, max_n);
    combine(&stats, smoothing)
}
