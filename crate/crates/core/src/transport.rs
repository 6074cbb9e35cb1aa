//! Optimal matching ablations: one-to-one assignment, earth mover's
//! distance over token (or bigram) embeddings, and the greedy vs. optimal
//! comparison across feature flag sets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::embeddings::{normalize_rows, EmbeddedSentence, EmbeddingMatrix, EmbeddingRecord, LayerPolicy};
use crate::idf::{build_idf, IdfPair, IdfTable};
use crate::matrix::Matrix;
use crate::scorer::{score_pair, similarity_matrix, ScoreConfig, ScoreError, SimilarityMatrix};
use crate::stats::{pearson, Reported};
use crate::tokenizer::{surviving_indices, FilterPolicy, TokenSequence};

/// Masses must sum to 1 within this tolerance.
pub const MASS_TOL: f64 = 1e-9;
/// Near-ties closer than this are broken lexicographically.
const TIE_TOL: f64 = 1e-9;
/// Largest common denominator used for exact rational masses.
const MAX_DENOMINATOR: u64 = 1_000_000_000_000;
const FIXED_POINT: u64 = 1_000_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("masses are infeasible: {0}")]
    InfeasibleMasses(String),
    #[error("cost matrix is {rows}x{cols} but masses have lengths {ref_len} and {cand_len}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        ref_len: usize,
        cand_len: usize,
    },
    #[error("order-{order} units need at least {order} tokens, sentence has {tokens}")]
    TooShortForOrder { order: usize, tokens: usize },
    #[error("unsupported n-gram order {0} (1 or 2)")]
    UnsupportedOrder(usize),
    #[error("unknown ablation flag {0:?}")]
    UnknownFlag(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// Maximum-similarity one-to-one matching.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub total: f64,
    /// `(reference row, candidate column)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
}

/// Kuhn–Munkres on a cost matrix with `rows <= cols`; returns the column
/// assigned to each row (minimum total cost).
fn hungarian_min(cost: &Matrix) -> Vec<usize> {
    let (n, m) = (cost.rows(), cost.cols());
    debug_assert!(n <= m);
    // 1-based potentials, column 0 is a virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    assign
}

/// Best total similarity of a full matching (size `min(rows, cols)`) of the
/// submatrix, or `None` if the submatrix is empty.
fn best_total(sim: &Matrix, rows: &[usize], cols: &[usize]) -> Option<f64> {
    if rows.is_empty() || cols.is_empty() {
        return None;
    }
    let sub = sim.select(rows, cols);
    let (work, transposed) = if sub.rows() <= sub.cols() {
        (sub.map(|x| -x), false)
    } else {
        (sub.transpose().map(|x| -x), true)
    };
    let assign = hungarian_min(&work);
    let mut pairs: Vec<(usize, usize)> = assign
        .iter()
        .enumerate()
        .map(|(a, &b)| if transposed { (b, a) } else { (a, b) })
        .collect();
    pairs.sort_unstable();
    Some(pairs.iter().map(|&(i, j)| sub.get(i, j)).sum())
}

/// Exact maximum-total-similarity matching of size `min(k, l)`. Among
/// optimal matchings (up to a 1e-9 tolerance) the one whose row-sorted pair
/// list is lexicographically smallest is returned.
pub fn optimal_assignment(sim: &SimilarityMatrix) -> Result<Assignment, TransportError> {
    let m = sim.values();
    let (k, l) = (m.rows(), m.cols());
    if k == 0 || l == 0 {
        return Err(TransportError::EmptyMatrix);
    }
    let all_rows: Vec<usize> = (0..k).collect();
    let all_cols: Vec<usize> = (0..l).collect();
    let optimum = best_total(m, &all_rows, &all_cols).expect("non-empty");
    let size = k.min(l);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(size);
    let mut used = vec![false; l];
    let mut fixed = 0.0;
    let mut next_row = 0;
    while pairs.len() < size {
        let remaining = size - pairs.len() - 1;
        let mut chosen = None;
        'rows: for i in next_row..k {
            let rest_rows: Vec<usize> = (i + 1..k).collect();
            if rest_rows.len() < remaining {
                break;
            }
            for j in 0..l {
                if used[j] {
                    continue;
                }
                let rest_cols: Vec<usize> = (0..l).filter(|&c| !used[c] && c != j).collect();
                if rest_cols.len() < remaining {
                    continue;
                }
                let rest = if remaining == 0 {
                    0.0
                } else {
                    match best_total(m, &rest_rows, &rest_cols) {
                        Some(v) if rest_rows.len().min(rest_cols.len()) == remaining => v,
                        _ => continue,
                    }
                };
                if fixed + m.get(i, j) + rest >= optimum - TIE_TOL * (1.0 + optimum.abs()) {
                    chosen = Some((i, j));
                    break 'rows;
                }
            }
        }
        let (i, j) = chosen.expect("an optimal completion always exists");
        fixed += m.get(i, j);
        used[j] = true;
        pairs.push((i, j));
        next_row = i + 1;
    }
    let total = pairs.iter().map(|&(i, j)| m.get(i, j)).sum();
    Ok(Assignment { total, pairs })
}

/// Cost matrix plus source/target mass distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    cost: Matrix,
    ref_mass: Vec<f64>,
    cand_mass: Vec<f64>,
}

impl TransportProblem {
    pub fn new(cost: Matrix, ref_mass: Vec<f64>, cand_mass: Vec<f64>) -> Result<Self, TransportError> {
        if cost.is_empty() {
            return Err(TransportError::EmptyMatrix);
        }
        if cost.rows() != ref_mass.len() || cost.cols() != cand_mass.len() {
            return Err(TransportError::ShapeMismatch {
                rows: cost.rows(),
                cols: cost.cols(),
                ref_len: ref_mass.len(),
                cand_len: cand_mass.len(),
            });
        }
        for (name, mass) in [("reference", &ref_mass), ("candidate", &cand_mass)] {
            if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
                return Err(TransportError::InfeasibleMasses(format!(
                    "{name} masses must be finite and non-negative"
                )));
            }
            let total: f64 = mass.iter().sum();
            if (total - 1.0).abs() > MASS_TOL {
                return Err(TransportError::InfeasibleMasses(format!(
                    "{name} masses sum to {total}"
                )));
            }
        }
        if cost.as_slice().iter().any(|c| !c.is_finite()) {
            return Err(TransportError::InfeasibleMasses("non-finite cost".into()));
        }
        Ok(Self {
            cost,
            ref_mass,
            cand_mass,
        })
    }

    pub fn cost(&self) -> &Matrix {
        &self.cost
    }

    pub fn ref_mass(&self) -> &[f64] {
        &self.ref_mass
    }

    pub fn cand_mass(&self) -> &[f64] {
        &self.cand_mass
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub flow: Matrix,
    pub objective: f64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Simplest fraction within `tol` of `x` in [0, 1], via continued fractions.
fn rationalize(x: f64, tol: f64) -> (u64, u64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > FIXED_POINT {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if (x - p1 as f64 / q1 as f64).abs() <= tol {
            return (p1, q1);
        }
        let frac = r - a as f64;
        if frac < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    let n = (x * FIXED_POINT as f64).round() as u64;
    (n, FIXED_POINT)
}

/// Integer masses over a common denominator: each mass is replaced by its
/// simplest rational within 1e-9 and the least common denominator is used
/// (falling back to 1e9 fixed-point when that denominator grows too large).
/// The largest entry of each side absorbs rounding so both sides total
/// exactly the denominator.
fn integer_masses(a: &[f64], b: &[f64]) -> (Vec<u64>, Vec<u64>, u64) {
    let fr: Vec<(u64, u64)> = a.iter().chain(b).map(|&x| rationalize(x, MASS_TOL)).collect();
    let mut denom: u64 = 1;
    for &(_, q) in &fr {
        let g = gcd(denom, q);
        match (denom / g).checked_mul(q) {
            Some(d) if d <= MAX_DENOMINATOR => denom = d,
            _ => {
                denom = 0;
                break;
            }
        }
    }
    let scaled: Vec<u64> = if denom == 0 {
        denom = FIXED_POINT;
        a.iter()
            .chain(b)
            .map(|&x| (x * FIXED_POINT as f64).round() as u64)
            .collect()
    } else {
        fr.iter().map(|&(p, q)| p * (denom / q)).collect()
    };
    let fix = |mut v: Vec<u64>| {
        let total: u64 = v.iter().sum();
        if total != denom {
            let (idx, _) = v
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(&x.0)))
                .expect("non-empty");
            v[idx] = (v[idx] + denom).saturating_sub(total);
        }
        v
    };
    let (left, right) = scaled.split_at(a.len());
    let (mut ai, mut bi) = (fix(left.to_vec()), fix(right.to_vec()));
    let g = ai.iter().chain(&bi).fold(denom, |acc, &x| gcd(acc, x));
    if g > 1 {
        ai.iter_mut().chain(bi.iter_mut()).for_each(|x| *x /= g);
        denom /= g;
    }
    (ai, bi, denom)
}

/// Exact minimum-cost transport plan.
///
/// Masses are made integral (see `integer_masses`), then the bipartite
/// min-cost flow is solved by successive shortest augmenting paths with
/// Dijkstra over reduced costs. Flows are returned as fractions of the
/// common denominator.
pub fn solve_transport(p: &TransportProblem) -> Result<TransportPlan, TransportError> {
    let (k, l) = (p.cost.rows(), p.cost.cols());
    let (supply, demand, denom) = integer_masses(&p.ref_mass, &p.cand_mass);
    let min_cost = p.cost.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    // shifted costs are non-negative; the shift changes every feasible
    // plan's cost by the same constant
    let cost = |i: usize, j: usize| p.cost.get(i, j) - min_cost;

    let mut flow = vec![0u64; k * l];
    let mut supply_left = supply.clone();
    let mut demand_left = demand.clone();
    // potentials: nodes 0..k are sources, k..k+l are targets
    let mut pot = vec![0.0f64; k + l];
    let mut remaining: u64 = supply.iter().sum();
    while remaining > 0 {
        // Dijkstra from a virtual super-source attached to every source with
        // supply left; residual arcs are i->j (always) and j->i (if flow > 0)
        let n = k + l;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        for i in 0..k {
            if supply_left[i] > 0 {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for x in 0..n {
                if !done[x] && dist[x] < best {
                    best = dist[x];
                    u = x;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < k {
                for j in 0..l {
                    let t = k + j;
                    let rc = (cost(u, j) + pot[u] - pot[t]).max(0.0);
                    if dist[u] + rc < dist[t] {
                        dist[t] = dist[u] + rc;
                        prev[t] = u;
                    }
                }
            } else {
                let j = u - k;
                for i in 0..k {
                    if flow[i * l + j] > 0 {
                        let rc = (-cost(i, j) + pot[u] - pot[i]).max(0.0);
                        if dist[u] + rc < dist[i] {
                            dist[i] = dist[u] + rc;
                            prev[i] = u;
                        }
                    }
                }
            }
        }
        // cheapest reachable target with demand left
        let target = (0..l)
            .filter(|&j| demand_left[j] > 0 && dist[k + j].is_finite())
            .min_by(|&a, &b| dist[k + a].total_cmp(&dist[k + b]).then(a.cmp(&b)))
            .ok_or_else(|| TransportError::InfeasibleMasses("no augmenting path".into()))?;
        // capping at the target distance keeps every residual reduced cost
        // non-negative, including for nodes Dijkstra did not reach
        let cap = dist[k + target];
        for x in 0..n {
            pot[x] += dist[x].min(cap);
        }
        // walk back to find the bottleneck
        let mut bottleneck = demand_left[target];
        let mut node = k + target;
        while prev[node] != usize::MAX {
            let from = prev[node];
            if from >= k {
                // backward arc target(from) -> source(node)
                bottleneck = bottleneck.min(flow[node * l + (from - k)]);
            }
            node = from;
        }
        bottleneck = bottleneck.min(supply_left[node]);
        let start = node;
        let mut node = k + target;
        while prev[node] != usize::MAX {
            let from = prev[node];
            if from < k {
                flow[from * l + (node - k)] += bottleneck;
            } else {
                flow[node * l + (from - k)] -= bottleneck;
            }
            node = from;
        }
        supply_left[start] -= bottleneck;
        demand_left[target] -= bottleneck;
        remaining -= bottleneck;
    }
    let d = denom as f64;
    let flow = Matrix::from_fn(k, l, |i, j| flow[i * l + j] as f64 / d);
    let objective = (0..k)
        .flat_map(|i| (0..l).map(move |j| (i, j)))
        .map(|(i, j)| flow.get(i, j) * p.cost.get(i, j))
        .sum();
    Ok(TransportPlan { flow, objective })
}

/// Unit size for word mover's scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NGramOrder {
    Unigram,
    Bigram,
}

impl NGramOrder {
    pub fn n(self) -> usize {
        match self {
            Self::Unigram => 1,
            Self::Bigram => 2,
        }
    }
}

impl TryFrom<usize> for NGramOrder {
    type Error = TransportError;

    fn try_from(n: usize) -> Result<Self, Self::Error> {
        match n {
            1 => Ok(Self::Unigram),
            2 => Ok(Self::Bigram),
            _ => Err(TransportError::UnsupportedOrder(n)),
        }
    }
}

struct Units {
    embeddings: EmbeddingMatrix,
    mass: Vec<f64>,
}

/// Bigram mass: sum of the member weights.
fn bigram_mass(a: f64, b: f64) -> f64 {
    a + b
}

fn build_units(
    s: &EmbeddedSentence,
    order: NGramOrder,
    table: Option<&IdfTable>,
    filter: &FilterPolicy,
) -> Result<Units, TransportError> {
    if s.tokens.is_empty() {
        return Err(ScoreError::EmptySentence.into());
    }
    let keep = surviving_indices(&s.tokens, filter);
    if keep.is_empty() {
        return Err(ScoreError::EmptyAfterFilter { side: "sentence" }.into());
    }
    let emb = s.embeddings.select_rows(&keep);
    let weights: Vec<f64> = keep
        .iter()
        .map(|&i| table.map_or(1.0, |t| t.weight(&s.tokens.pieces()[i])))
        .collect();
    let (embeddings, mass) = match order {
        NGramOrder::Unigram => (emb, weights),
        NGramOrder::Bigram => {
            if keep.len() < 2 {
                return Err(TransportError::TooShortForOrder {
                    order: 2,
                    tokens: keep.len(),
                });
            }
            let rows: Vec<Vec<f64>> = (0..keep.len() - 1)
                .map(|t| {
                    emb.row(t)
                        .iter()
                        .zip(emb.row(t + 1))
                        .map(|(a, b)| (a + b) / 2.0)
                        .collect()
                })
                .collect();
            let m = EmbeddingMatrix::from_rows(&rows).expect("equal dims");
            let m = normalize_rows(&m).map_err(ScoreError::from)?;
            let mass = weights.windows(2).map(|w| bigram_mass(w[0], w[1])).collect();
            (m, mass)
        }
    };
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return Err(ScoreError::ZeroWeight { side: "sentence" }.into());
    }
    Ok(Units {
        embeddings,
        mass: mass.into_iter().map(|m| m / total).collect(),
    })
}

/// Negated earth mover's distance under cost `1 - cosine`; higher is more
/// similar and identical sentences score 0. Reference masses come from the
/// reference-side idf table, candidate masses from the candidate-side table,
/// uniform without idf.
pub fn wmd_score(
    reference: &EmbeddedSentence,
    candidate: &EmbeddedSentence,
    order: NGramOrder,
    idf: Option<&IdfPair>,
    filter: &FilterPolicy,
) -> Result<f64, TransportError> {
    let r = build_units(reference, order, idf.map(|p| &p.reference), filter)?;
    let c = build_units(candidate, order, idf.map(|p| &p.candidate), filter)?;
    let sim = similarity_matrix(&r.embeddings, &c.embeddings)?;
    let cost = sim.values().map(|s| 1.0 - s);
    let plan = solve_transport(&TransportProblem::new(cost, r.mass, c.mass)?)?;
    Ok(-plan.objective)
}

/// Which idf corpus feeds the reference side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IdfSource {
    Small,
    Large,
}

/// One combination of ablation switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct FlagSet {
    pub idf: Option<IdfSource>,
    pub sep: bool,
    pub pmeans: bool,
    pub rm: bool,
}

impl FlagSet {
    /// Flag sets of the standard ablation table that need no large corpus.
    pub fn standard() -> Vec<Self> {
        ["vanilla", "IDF-S", "IDF-S+SEP", "IDF-S+SEP+RM", "IDF-S+SEP+PMEANS", "IDF-S+SEP+PMEANS+RM"]
            .iter()
            .map(|s| s.parse().expect("valid flag set"))
            .collect()
    }
}

impl FromStr for FlagSet {
    type Err = TransportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut f = Self::default();
        for part in s.split('+').map(str::trim) {
            match part.to_ascii_uppercase().as_str() {
                "VANILLA" | "" => {}
                "IDF-S" => f.idf = Some(IdfSource::Small),
                "IDF-L" => f.idf = Some(IdfSource::Large),
                "SEP" => f.sep = true,
                "PMEANS" => f.pmeans = true,
                "RM" => f.rm = true,
                _ => return Err(TransportError::UnknownFlag(part.to_string())),
            }
        }
        Ok(f)
    }
}

impl fmt::Display for FlagSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.idf {
            Some(IdfSource::Small) => parts.push("IDF-S"),
            Some(IdfSource::Large) => parts.push("IDF-L"),
            None => {}
        }
        if self.sep {
            parts.push("SEP");
        }
        if self.pmeans {
            parts.push("PMEANS");
        }
        if self.rm {
            parts.push("RM");
        }
        if parts.is_empty() {
            f.write_str("vanilla")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

/// A reference/candidate pair with all layers available, plus its human score.
#[derive(Debug, Clone)]
pub struct AblationSegment {
    pub reference: EmbeddingRecord,
    pub candidate: EmbeddingRecord,
    pub human: f64,
}

/// Everything `compare_matching` needs besides the segments.
#[derive(Debug, Clone)]
pub struct AblationSetup {
    /// Corpus for IDF-L; IDF-S uses the segment references.
    pub large_corpus: Option<Vec<TokenSequence>>,
    pub layer: LayerPolicy,
    pub pmeans: LayerPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    #[serde(rename = "greedy_F")]
    pub greedy_f: Reported,
    #[serde(rename = "WMD1")]
    pub wmd1: Reported,
    #[serde(rename = "WMD2")]
    pub wmd2: Reported,
}

fn correlate<E: fmt::Display>(scores: Result<Vec<f64>, E>, human: &[f64]) -> Reported {
    match scores {
        Ok(s) => pearson(&s, human).into(),
        Err(e) => Reported::error(e.to_string()),
    }
}

/// Pearson correlation with human scores of greedy F1, WMD1 and WMD2 under
/// each flag set. Columns that cannot be computed become error entries.
pub fn compare_matching(
    segments: &[AblationSegment],
    setup: &AblationSetup,
    flag_sets: &[FlagSet],
) -> Result<BTreeMap<String, AblationRow>, TransportError> {
    let human: Vec<f64> = segments.iter().map(|s| s.human).collect();
    let ref_tokens: Vec<TokenSequence> = segments.iter().map(|s| s.reference.tokens.clone()).collect();
    let cand_tokens: Vec<TokenSequence> = segments.iter().map(|s| s.candidate.tokens.clone()).collect();
    let mut out = BTreeMap::new();
    for flags in flag_sets {
        let idf = match (flags.idf, flags.sep) {
            (None, false) => Ok(None),
            (source, sep) => {
                let refs = match source {
                    Some(IdfSource::Large) => setup.large_corpus.as_deref().ok_or_else(|| {
                        "IDF-L requested without a large reference corpus".to_string()
                    }),
                    _ => Ok(&ref_tokens[..]),
                };
                refs.and_then(|refs| {
                    let reference = build_idf(refs).map_err(|e| e.to_string())?;
                    let candidate = if sep {
                        build_idf(&cand_tokens).map_err(|e| e.to_string())?
                    } else {
                        reference.clone()
                    };
                    Ok(Some(IdfPair { reference, candidate }))
                })
            }
        };
        let idf = match idf {
            Ok(i) => i,
            Err(e) => {
                let err = Reported::error(e);
                out.insert(
                    flags.to_string(),
                    AblationRow {
                        greedy_f: err.clone(),
                        wmd1: err.clone(),
                        wmd2: err,
                    },
                );
                continue;
            }
        };
        let cfg = ScoreConfig {
            idf,
            filter: if flags.rm {
                FilterPolicy::remove_all()
            } else {
                FilterPolicy::none()
            },
            layer: if flags.pmeans {
                setup.pmeans.clone()
            } else {
                setup.layer.clone()
            },
            baseline: None,
        };
        let embedded: Result<Vec<(EmbeddedSentence, EmbeddedSentence)>, String> = segments
            .par_iter()
            .map(|s| {
                Ok((
                    s.reference.embedded(&cfg.layer).map_err(|e| e.to_string())?,
                    s.candidate.embedded(&cfg.layer).map_err(|e| e.to_string())?,
                ))
            })
            .collect();
        let row = match embedded {
            Err(e) => {
                let err = Reported::error(e);
                AblationRow {
                    greedy_f: err.clone(),
                    wmd1: err.clone(),
                    wmd2: err,
                }
            }
            Ok(pairs) => {
                let greedy: Result<Vec<f64>, ScoreError> = pairs
                    .par_iter()
                    .map(|(r, c)| score_pair(r, c, &cfg).map(|t| t.f1))
                    .collect();
                let wmd = |order| -> Result<Vec<f64>, TransportError> {
                    pairs
                        .par_iter()
                        .map(|(r, c)| wmd_score(r, c, order, cfg.idf.as_ref(), &cfg.filter))
                        .collect()
                };
                AblationRow {
                    greedy_f: correlate(greedy, &human),
                    wmd1: correlate(wmd(NGramOrder::Unigram), &human),
                    wmd2: correlate(wmd(NGramOrder::Bigram), &human),
                }
            }
        };
        out.insert(flags.to_string(), row);
    }
    Ok(out)
}
