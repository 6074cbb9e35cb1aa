//! Synthetic fixtures shared by the CLI test targets.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use embedscore::rng::{substream, Domain};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_embedscore"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Unit vector at cosine `cos` from unit vector `u`.
pub fn partner(rng: &mut ChaCha8Rng, u: &[f64], cos: f64) -> Vec<f64> {
    let r = unit_gaussian(rng, u.len());
    let dot: f64 = r.iter().zip(u).map(|(a, b)| a * b).sum();
    let orth: Vec<f64> = r.iter().zip(u).map(|(a, b)| a - dot * b).collect();
    let n = orth.iter().map(|x| x * x).sum::<f64>().sqrt();
    let s = (1.0 - cos * cos).sqrt();
    u.iter().zip(&orth).map(|(a, o)| cos * a + s * o / n).collect()
}

/// Vocabulary `w0..` with synonyms `s0..` at a fixed cosine.
pub struct SynonymWorld {
    pub words: Vec<String>,
    pub synonyms: Vec<String>,
    pub vectors: Vec<(String, Vec<f64>)>,
}

impl SynonymWorld {
    pub fn new(seed: u64, size: usize, dim: usize, cos: f64) -> Self {
        let mut rng = substream(seed, Domain::Synthetic, 0);
        let mut vectors = Vec::new();
        let words: Vec<String> = (0..size).map(|i| format!("w{i}")).collect();
        let synonyms: Vec<String> = (0..size).map(|i| format!("s{i}")).collect();
        for i in 0..size {
            let u = unit_gaussian(&mut rng, dim);
            let p = partner(&mut rng, &u, cos);
            vectors.push((words[i].clone(), u));
            vectors.push((synonyms[i].clone(), p));
        }
        Self { words, synonyms, vectors }
    }

    pub fn jsonl(&self) -> String {
        let mut s = String::new();
        for (piece, v) in &self.vectors {
            writeln!(s, "{}", serde_json::json!({ "piece": piece, "vector": v })).unwrap();
        }
        s
    }
}

/// A small judged corpus: `systems` systems over `ids` references built from
/// the synonym world, human score decreasing with substitutions.
pub fn corpus_tsv(world: &SynonymWorld, seed: u64, systems: usize, ids: usize) -> String {
    let mut rng = substream(seed, Domain::Synthetic, 1);
    let mut s = String::from("id\tsystem\treference\tcandidate\thuman_score\n");
    for i in 0..ids {
        let len = rng.random_range(6..10);
        let reference: Vec<usize> = (0..len).map(|_| rng.random_range(0..world.words.len())).collect();
        let ref_text: Vec<&str> = reference.iter().map(|&w| world.words[w].as_str()).collect();
        for k in 0..systems {
            let mut cand: Vec<&str> = ref_text.clone();
            let subs = rng.random_range(0..=4usize);
            for p in 0..subs {
                cand[p] = world.synonyms[reference[p]].as_str();
            }
            if rng.random_bool(0.3) {
                cand.pop();
            }
            let human = 1.0 - subs as f64 / 5.0 + rng.random_range(-0.1..0.1);
            writeln!(s, "seg{i:03}\tsys{k}\t{}\t{}\t{human:.4}", ref_text.join(" "), cand.join(" ")).unwrap();
        }
    }
    s
}

/// Precomputed records for every sentence of a segment corpus: `layers`
/// random layers per token, keyed `<id>` and `<system>:<id>`.
pub fn precomputed_jsonl(corpus: &str, seed: u64, layers: usize, dim: usize) -> String {
    let mut rng = substream(seed, Domain::Synthetic, 2);
    let mut out = String::new();
    let mut seen = std::collections::BTreeSet::new();
    for line in corpus.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        for (key, text) in [(f[0].to_string(), f[2]), (format!("{}:{}", f[1], f[0]), f[3])] {
            if !seen.insert(key.clone()) {
                continue;
            }
            let tokens: Vec<&str> = text.split_whitespace().collect();
            let stack: Vec<Vec<Vec<f64>>> = (0..layers)
                .map(|_| tokens.iter().map(|_| unit_gaussian(&mut rng, dim)).collect())
                .collect();
            writeln!(
                out,
                "{}",
                serde_json::json!({ "id": key, "tokens": tokens, "layers": stack })
            )
            .unwrap();
        }
    }
    out
}

/// Temporary directory holding a static table, a corpus and a sentence pool.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub table: PathBuf,
    pub corpus: PathBuf,
    pub pool: PathBuf,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let world = SynonymWorld::new(7, 30, 16, 0.9);
        let table = dir.path().join("table.jsonl");
        fs::write(&table, world.jsonl()).unwrap();
        let corpus_text = corpus_tsv(&world, 7, 3, 12);
        let corpus = dir.path().join("corpus.tsv");
        fs::write(&corpus, &corpus_text).unwrap();
        let mut pool_text = String::from("id\ttext\n");
        for (i, line) in corpus_text.lines().skip(1).enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            writeln!(pool_text, "p{i}\t{}", f[3]).unwrap();
        }
        let pool = dir.path().join("pool.tsv");
        fs::write(&pool, pool_text).unwrap();
        Self { dir, table, corpus, pool }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn provider(&self) -> String {
        format!("static:{}", self.table.display())
    }
}
