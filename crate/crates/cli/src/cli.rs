use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Sliding-window document-level QE: scoring, grid sweeps, corpus
/// statistics and synthetic corpora.
///
/// Exit status: 0 on success, 2 on usage or configuration errors, 1 when a
/// pipeline stage fails at runtime.
#[derive(Debug, Parser)]
#[command(name = "slide", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every system at one (w, s) and print system-level scores.
    Score,
    /// Sweep all 1 <= s <= w <= w_max cells and report pairwise accuracy.
    Grid,
    /// Dropped-sentence fractions and overlength-chunk fractions.
    Stats,
    /// Write a seeded synthetic corpus with cross-sentence ambiguity.
    Synth,
    /// Resolve the configuration and load all inputs without scoring.
    Validate,
}

#[derive(Debug, Args)]
pub struct Options {
    /// TOML run configuration; flags override its fields.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(short, long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: logical cores; an external scorer's window).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run on one thread regardless of the build.
    #[arg(long, global = true)]
    pub sequential: bool,

    /// Language pair of the corpus given by flags (also names the synthetic pair).
    #[arg(long, global = true)]
    pub lang_pair: Option<String>,
    /// Source sentences, one per line.
    #[arg(long, global = true)]
    pub source: Option<PathBuf>,
    /// Document id per source line.
    #[arg(long, global = true)]
    pub docids: Option<PathBuf>,
    /// System output as NAME=PATH; repeatable.
    #[arg(long, global = true, value_name = "NAME=PATH")]
    pub system: Vec<String>,
    /// Single-file corpus: JSON lines with doc_id, src and hyp per system.
    #[arg(long, global = true, conflicts_with_all = ["source", "docids"])]
    pub jsonl: Option<PathBuf>,
    /// Human system scores (TSV: lang_pair, system, score[, style]).
    #[arg(long, global = true)]
    pub human_scores: Option<PathBuf>,

    /// constant, length_ratio, lexical_overlap, context_aware_mock or external.
    #[arg(long, global = true)]
    pub scorer: Option<String>,
    /// Scorer parameter as KEY=VALUE (value, command, endpoint, timeout_ms,
    /// window); repeatable. An external scorer without a command or
    /// endpoint connects to $SLIDE_SCORER_ENDPOINT.
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    pub scorer_param: Vec<String>,

    /// Window size in sentences.
    #[arg(short = 'w', long, global = true)]
    pub window: Option<usize>,
    /// Stride in sentences (default: the window size).
    #[arg(short = 's', long, global = true)]
    pub stride: Option<usize>,
    #[arg(long, global = true)]
    pub w_max: Option<usize>,
    /// DROP or INCLUDE.
    #[arg(long, global = true)]
    pub partial_policy: Option<String>,
    /// uniform or sentence_weighted.
    #[arg(long, global = true)]
    pub weighting: Option<String>,
    /// Chunk by token budget instead of sentence count (score only).
    #[arg(long, global = true)]
    pub max_tokens: Option<usize>,
    /// whitespace, chars, or sidecar:DIR with one <system>.tsv per system.
    #[arg(long, global = true)]
    pub tokenizer: Option<String>,
    /// Token limit for overlength statistics.
    #[arg(long, global = true)]
    pub limit: Option<usize>,
    /// Also write per-chunk scores (score only).
    #[arg(long, global = true)]
    pub dump_chunks: bool,

    #[arg(long, global = true)]
    pub n_docs: Option<usize>,
    /// N, or MIN:MAX for uniformly distributed lengths.
    #[arg(long, global = true)]
    pub doc_len: Option<String>,
    #[arg(long, global = true)]
    pub ambiguity_rate: Option<f64>,
    /// Synthetic system as NAME=RATE; repeatable.
    #[arg(long, global = true, value_name = "NAME=RATE")]
    pub error_rate: Vec<String>,
}
