//! Meta-evaluation: pairwise system accuracy against human scores, window
//! grid sweeps, corpus statistics and synthetic context-sensitive corpora.

pub mod accuracy;
pub mod export;
pub mod grid;
pub mod stats;
pub mod synthetic;

pub use accuracy::{pairwise_accuracy, system_pairs, AccuracyReport, MetricScores, PairCounts, SystemPair};
pub use grid::{grid_cells, run_cells, run_grid, GridOptions, GridResult, LangPairData};
pub use stats::{corpus_stats, dropped_fraction, dropped_sentences, CorpusStats, TokenizerChoice};
pub use synthetic::{generate_synthetic_corpus, DocLength, SyntheticCorpus, SyntheticParams};
