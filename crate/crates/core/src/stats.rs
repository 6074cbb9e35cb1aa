//! Correlation and significance: Pearson, Kendall tau-b, the Williams test
//! for dependent correlations, paired bootstrap and ROC AUC.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::rng::{substream, Domain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("all pairs tied")]
    AllTied,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("labels contain only one class")]
    OneClassOnly,
    #[error("iterations must be at least 1")]
    NoIterations,
}

/// Metric scores paired with human judgments over the same items.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedScores {
    metric: Vec<f64>,
    human: Vec<f64>,
}

impl PairedScores {
    pub fn new(metric: Vec<f64>, human: Vec<f64>) -> Result<Self, StatsError> {
        check_pair(&metric, &human)?;
        Ok(Self { metric, human })
    }

    pub fn metric(&self) -> &[f64] {
        &self.metric
    }

    pub fn human(&self) -> &[f64] {
        &self.human
    }

    pub fn len(&self) -> usize {
        self.metric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metric.is_empty()
    }

    pub fn pearson(&self) -> Result<f64, StatsError> {
        pearson(&self.metric, &self.human)
    }

    pub fn kendall(&self) -> Result<f64, StatsError> {
        kendall(&self.metric, &self.human)
    }
}

/// A statistic or the reason it could not be computed. Serializes as a bare
/// number or as `{"error": "..."}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reported {
    Value(f64),
    Error { error: String },
}

impl Reported {
    pub fn error(message: impl Into<String>) -> Self {
        Reported::Error {
            error: message.into(),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Reported::Value(v) => Some(*v),
            Reported::Error { .. } => None,
        }
    }
}

impl From<Result<f64, StatsError>> for Reported {
    fn from(r: Result<f64, StatsError>) -> Self {
        match r {
            Ok(v) => Reported::Value(v),
            Err(e) => Reported::error(e.to_string()),
        }
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFew { need: 2, got: x.len() });
    }
    check_finite(x)?;
    check_finite(y)
}

fn check_finite(x: &[f64]) -> Result<(), StatsError> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(StatsError::NonFinite(i)),
        None => Ok(()),
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    if x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
        return Err(StatsError::ZeroVariance);
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pair counts behind tau-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KendallCounts {
    /// Concordant minus discordant pairs.
    pub net: i64,
    /// Pairs not tied in x (`C + D + ties in y only`).
    pub untied_x: u64,
    /// Pairs not tied in y.
    pub untied_y: u64,
}

impl KendallCounts {
    pub fn tau_b(&self) -> Result<f64, StatsError> {
        if self.untied_x == 0 || self.untied_y == 0 {
            return Err(StatsError::AllTied);
        }
        Ok(self.net as f64 / (self.untied_x as f64 * self.untied_y as f64).sqrt())
    }
}

fn tie_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` in place and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Concordance counts in O(n log n).
pub fn kendall_counts(x: &[f64], y: &[f64]) -> Result<KendallCounts, StatsError> {
    check_pair(x, y)?;
    let n = x.len() as u64;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tx = tie_pairs(&xs);
    let joint = tie_pairs(&pairs);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = merge_count(&mut ys, &mut buf);
    let ty = tie_pairs(&ys);
    let total = n * (n - 1) / 2;
    let net = total as i64 - tx as i64 - ty as i64 + joint as i64 - 2 * swaps as i64;
    Ok(KendallCounts {
        net,
        untied_x: total - tx,
        untied_y: total - ty,
    })
}

/// Kendall tau-b.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    kendall_counts(x, y)?.tau_b()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilliamsResult {
    pub t: f64,
    /// One-sided: probability of a t at least this large under the null.
    pub p: f64,
    pub df: usize,
}

impl WilliamsResult {
    pub fn two_sided(&self) -> f64 {
        (2.0 * self.p.min(1.0 - self.p)).min(1.0)
    }
}

/// Upper tail `P(T >= t)` of Student's t with `df` degrees of freedom.
pub fn t_upper_tail(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let half = 0.5 * beta_reg(df / 2.0, 0.5, x);
    if t > 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// Williams test for `r12 > r13`, where both correlations share variable 1
/// and `r23` is the correlation between variables 2 and 3.
pub fn williams_test(r12: f64, r13: f64, r23: f64, n: usize) -> Result<WilliamsResult, StatsError> {
    if n < 4 {
        return Err(StatsError::DegenerateInput(format!("n = {n} < 4")));
    }
    for r in [r12, r13, r23] {
        if !r.is_finite() || r.abs() > 1.0 {
            return Err(StatsError::DegenerateInput(format!("correlation {r} outside [-1, 1]")));
        }
    }
    // grouped so that swapping r12 and r13 gives a bit-identical K
    let k = 1.0 - (r12 * r12 + r13 * r13) - r23 * r23 + 2.0 * (r12 * r13) * r23;
    if k <= 1e-12 {
        return Err(StatsError::DegenerateInput(format!("K = {k}")));
    }
    let nf = n as f64;
    let rbar = (r12 + r13) / 2.0;
    let num = (r12 - r13) * ((nf - 1.0) * (1.0 + r23)).sqrt();
    let den = (2.0 * k * (nf - 1.0) / (nf - 3.0) + rbar * rbar * (1.0 - r23).powi(3)).sqrt();
    let t = num / den;
    let df = n - 3;
    Ok(WilliamsResult {
        t,
        p: t_upper_tail(t, df as f64),
        df,
    })
}

/// Paired bootstrap over segments. Returns the share of resamples in which
/// metric A does not correlate better (Kendall) with `human` than metric B.
/// Equal taus and resamples where either tau is undefined count one half.
pub fn bootstrap_compare(
    a: &[f64],
    b: &[f64],
    human: &[f64],
    iterations: usize,
    seed: u64,
) -> Result<f64, StatsError> {
    if iterations == 0 {
        return Err(StatsError::NoIterations);
    }
    check_pair(a, human)?;
    check_pair(b, human)?;
    let n = human.len();
    let credit: Vec<f64> = (0..iterations)
        .into_par_iter()
        .map(|it| {
            let mut rng = substream(seed, Domain::Bootstrap, it as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
            let h = pick(human);
            match (kendall(&pick(a), &h), kendall(&pick(b), &h)) {
                (Ok(ta), Ok(tb)) if ta < tb => 1.0,
                (Ok(ta), Ok(tb)) if ta > tb => 0.0,
                _ => 0.5,
            }
        })
        .collect();
    Ok(credit.iter().sum::<f64>() / iterations as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// credited one half. Uses doubled midranks so the result is an exact ratio
/// of integers.
pub fn roc_auc(labels: &[bool], scores: &[f64]) -> Result<f64, StatsError> {
    if labels.len() != scores.len() {
        return Err(StatsError::LengthMismatch(labels.len(), scores.len()));
    }
    check_finite(scores)?;
    let pos = labels.iter().filter(|l| **l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(StatsError::OneClassOnly);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut rank_sum2 = 0u64;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end; doubled midrank is their sum of ends
        let mid2 = (start + 1 + end) as u64;
        let hits = order[start..end].iter().filter(|&&i| labels[i]).count() as u64;
        rank_sum2 += mid2 * hits;
        start = end;
    }
    let u2 = rank_sum2 - pos * (pos + 1);
    Ok(u2 as f64 / (2 * pos * neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_kendall(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0u64, 0u64);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let dx = x[i] - x[j];
                let dy = y[i] - y[j];
                if dx == 0.0 && dy == 0.0 {
                } else if dx == 0.0 {
                    tx += 1;
                } else if dy == 0.0 {
                    ty += 1;
                } else if (dx > 0.0) == (dy > 0.0) {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
        let a = (c + d) as u64 + ty;
        let b = (c + d) as u64 + tx;
        if a == 0 || b == 0 {
            return Err(StatsError::AllTied);
        }
        Ok((c - d) as f64 / (a as f64 * b as f64).sqrt())
    }

    fn naive_auc(labels: &[bool], scores: &[f64]) -> f64 {
        let (mut num, mut p, mut n) = (0u64, 0u64, 0u64);
        for (i, &li) in labels.iter().enumerate() {
            if li {
                p += 1;
            } else {
                n += 1;
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if !lj {
                    num += if scores[i] > scores[j] {
                        2
                    } else if scores[i] == scores[j] {
                        1
                    } else {
                        0
                    };
                }
            }
        }
        num as f64 / (2 * p * n) as f64
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(StatsError::ZeroVariance));
        assert_eq!(pearson(&[1.0], &[1.0]), Err(StatsError::TooFew { need: 2, got: 1 }));
        assert_eq!(pearson(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch(2, 1)));
        assert_eq!(pearson(&[1.0, f64::NAN], &[1.0, 2.0]), Err(StatsError::NonFinite(1)));
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap(), 1.0);
        assert!((kendall(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(kendall(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(kendall(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(StatsError::AllTied));
        // tied x: pairs (0,1) tied in x, (0,2) and (1,2) concordant
        let t = kendall(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((t - 2.0 / (2.0f64 * 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn williams_frozen() {
        let w = williams_test(0.8, 0.7, 0.6, 100).unwrap();
        assert!((w.t - 1.971_564_707_348_994_6).abs() < 1e-9);
        assert!((w.p - 0.025_754_050_027_497_69).abs() < 1e-9);
        assert_eq!(w.df, 97);
        let w = williams_test(0.5, 0.45, 0.3, 20).unwrap();
        assert!((w.t - 0.209_882_039_911_198_53).abs() < 1e-9);
        assert!((w.p - 0.418_127_251_527_567_7).abs() < 1e-9);
    }

    #[test]
    fn williams_null_and_errors() {
        let w = williams_test(0.6, 0.6, 0.5, 30).unwrap();
        assert_eq!(w.t, 0.0);
        assert_eq!(w.p, 0.5);
        assert!(matches!(williams_test(0.8, 0.7, 0.6, 3), Err(StatsError::DegenerateInput(_))));
        assert!(matches!(williams_test(1.0, 1.0, 1.0, 30), Err(StatsError::DegenerateInput(_))));
        assert!(matches!(williams_test(1.2, 0.1, 0.1, 30), Err(StatsError::DegenerateInput(_))));
        let a = williams_test(0.7, 0.5, 0.4, 50).unwrap();
        let b = williams_test(0.5, 0.7, 0.4, 50).unwrap();
        assert_eq!(a.t, -b.t);
        assert!((a.p + b.p - 1.0).abs() < 1e-15);
        assert!((a.two_sided() - 2.0 * a.p).abs() < 1e-15);
    }

    #[test]
    fn t_tail_matches_known_quantile() {
        // 97.5% quantile of t with 10 df
        assert!((t_upper_tail(2.228_138_851_986_274, 10.0) - 0.025).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_identical_metrics() {
        let h = [0.1, 0.5, 0.3, 0.9, 0.7];
        assert_eq!(bootstrap_compare(&h, &h, &h, 200, 3).unwrap(), 0.5);
        assert_eq!(bootstrap_compare(&h, &h, &h, 0, 3), Err(StatsError::NoIterations));
    }

    #[test]
    fn bootstrap_prefers_exact_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let human: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let noise: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let p = bootstrap_compare(&human, &noise, &human, 1000, 42).unwrap();
        assert!(p <= 0.05, "p = {p}");
        let one = bootstrap_compare(&human, &noise, &human, 1, 42).unwrap();
        assert!([0.0, 0.5, 1.0].contains(&one));
        assert_eq!(p, bootstrap_compare(&human, &noise, &human, 1000, 42).unwrap());
    }

    #[test]
    fn auc_examples() {
        let l = [true, true, false, false];
        assert_eq!(roc_auc(&l, &[0.9, 0.8, 0.2, 0.1]).unwrap(), 1.0);
        assert_eq!(roc_auc(&l, &[0.5; 4]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[true, true], &[0.1, 0.2]), Err(StatsError::OneClassOnly));
        let s = [0.3, 0.1, 0.4, 0.2];
        assert_eq!(roc_auc(&l, &s).unwrap(), naive_auc(&l, &s));
    }

    #[test]
    fn paired_scores_and_reported() {
        assert!(PairedScores::new(vec![1.0], vec![1.0]).is_err());
        let p = PairedScores::new(vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(p.pearson().unwrap(), 0.5);
        assert_eq!(serde_json::to_string(&Reported::Value(0.5)).unwrap(), "0.5");
        assert_eq!(
            serde_json::to_string(&Reported::from(Err(StatsError::ZeroVariance))).unwrap(),
            "{\"error\":\"zero variance\"}"
        );
    }

    fn tied_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec((0u8..6).prop_map(f64::from), n)
    }

    proptest! {
        #[test]
        fn kendall_matches_enumeration((x, y) in (2usize..60).prop_flat_map(|n| (tied_vec(n), tied_vec(n)))) {
            let fast = kendall(&x, &y);
            let slow = naive_kendall(&x, &y);
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn auc_matches_enumeration(items in proptest::collection::vec((any::<bool>(), 0u8..8), 2..80)) {
            let labels: Vec<bool> = items.iter().map(|i| i.0).collect();
            let scores: Vec<f64> = items.iter().map(|i| f64::from(i.1)).collect();
            if let Ok(v) = roc_auc(&labels, &scores) {
                prop_assert_eq!(v, naive_auc(&labels, &scores));
            }
        }

        #[test]
        fn monotone_invariance(x in proptest::collection::vec(-10.0f64..10.0, 3..30), scale in 0.1f64..5.0, shift in -3.0f64..3.0) {
            let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v.sin() + i as f64 * 0.1).collect();
            let xt: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
            if let (Ok(a), Ok(b)) = (pearson(&x, &y), pearson(&xt, &y)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let xe: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            prop_assert_eq!(kendall(&x, &y), kendall(&xe, &y));
        }
    }
}
