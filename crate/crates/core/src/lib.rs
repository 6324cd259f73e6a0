//! Sliding-window document-level quality estimation.
//!
//! Documents are cut into overlapping or disjoint chunks of consecutive
//! sentences; each chunk's space-joined source and hypothesis are scored as a
//! single segment pair by an unmodified sentence-level scorer, and chunk
//! scores are averaged into one system-level score. [`metaeval`] measures
//! how often those scores order system pairs the same way human judgments do.
//!
//! ```
//! use slide_core::{
//!     corpus::{Sentence, SystemOutput, TestSet},
//!     aggregation::{score_system, Weighting},
//!     exec::Execution,
//!     scoring::{ScorerKind, ScorerSpec},
//!     windowing::{PartialPolicy, WindowConfig},
//! };
//!
//! let s = |t: &str| Sentence::new(t).unwrap();
//! let ts = TestSet::from_documents("en-de", vec![("d1", vec![s("a b"), s("c"), s("d e")])]).unwrap();
//! let sys = SystemOutput::new("sysA", &ts, vec![s("a b"), s("x"), s("d e")]).unwrap();
//! let scorer = ScorerSpec::new(ScorerKind::LexicalOverlap).build(Execution::default()).unwrap();
//! let cfg = WindowConfig::new(2, 1, PartialPolicy::Drop).unwrap();
//! let score = score_system(&ts, &sys, &cfg.into(), scorer.as_ref(), Weighting::Uniform).unwrap();
//! assert_eq!(score.n_chunks, 2);
//! assert_eq!(score.config_label, "w2s1/DROP/uniform");
//! ```

pub mod aggregation;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod metaeval;
pub mod scoring;
pub mod tokenize;
pub mod windowing;

pub use error::{Result, SlideError, Stage};
