//! `embedscore` command-line driver.

mod commands;
mod common;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;

const FORMATS: &str = "\
Input formats (UTF-8, tab separated, header row required, no quoting):
  sentences        id, text
  segment corpus   id, system, reference, candidate, human_score
                   (empty human_score = no judgment)
  system scores    system, human_score
  paraphrases      id, sentence1, sentence2, label (0/1)

Providers:
  static:<path>       JSON Lines {\"piece\": str, \"vector\": [f64]}
  precomputed:<path>  JSON Lines {\"id\": str, \"tokens\": [str], \"layers\": [[[f64]]]}
  remote:<url>        POST {\"sentences\": [{\"id\", \"text\"}], \"layers\": [usize]}
                      returning {\"sentences\": [{\"id\", \"tokens\", \"layers\"}]}
  Precomputed and remote sentences are keyed <id> for references and
  <system>:<id> for candidates (score: cand:<id>, extra references <id>#<k>;
  auc: <id>:1 and <id>:2).

Outputs:
  score        JSON Lines {\"id\", \"P\", \"R\", \"F\", \"rescaled\", \"ref_index\"?, \"metric\"?}
  idf          JSON Lines header {\"corpus_size\", \"unseen_weight\"} then {\"piece\", \"weight\"}
  others       one JSON report with format_version, command, config, provider and seed

Exit status: 0 success, 2 invalid input, 1 runtime failure.
Logging: EMBEDSCORE_LOG=error|warn|info|debug|trace";

#[derive(Debug, Parser)]
#[command(name = "embedscore", version, about = "Embedding-based similarity scores for text generation", after_long_help = FORMATS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score candidates against references
    Score(ScoreArgs),
    /// Build an idf table from a reference corpus
    Idf(IdfArgs),
    /// Estimate a rescaling baseline from random sentence pairs
    Baseline(BaselineArgs),
    /// Segment-level correlation and significance against human judgments
    EvalSegment(EvalSegmentArgs),
    /// System-level correlation, optionally over hybrid systems
    EvalSystem(EvalSystemArgs),
    /// Hits@1, MRR and score gap when selecting among hybrid systems
    ModelSelect(ModelSelectArgs),
    /// Greedy matching vs optimal transport under feature flag sets
    Ablation(AblationArgs),
    /// Human correlation of F per encoder layer
    LayerSweep(LayerSweepArgs),
    /// ROC AUC of scores on labeled paraphrase pairs
    Auc(AucArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("EMBEDSCORE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Score(a) => score(a),
        Command::Idf(a) => idf(a),
        Command::Baseline(a) => baseline(a),
        Command::EvalSegment(a) => eval_segment(a),
        Command::EvalSystem(a) => eval_system(a),
        Command::ModelSelect(a) => model_select(a),
        Command::Ablation(a) => ablation(a),
        Command::LayerSweep(a) => layer_sweep_cmd(a),
        Command::Auc(a) => auc(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("embedscore: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
