//! Corpus statistics: sentences lost to dropped partial windows, and chunks
//! whose token count exceeds a model's input limit.

use std::collections::BTreeMap;

use super::grid::grid_cells;
use crate::corpus::{SystemOutput, TestSet};
use crate::error::{Result, SlideError};
use crate::tokenize::Tokenizer;
use crate::windowing::{extract_chunks, full_window_count, PartialPolicy, WindowConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroppedCell {
    pub dropped: usize,
    pub total: usize,
}

impl DroppedCell {
    pub fn fraction(&self) -> f64 {
        self.dropped as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlengthCell {
    pub n_chunks: usize,
    pub n_overlength: usize,
}

impl OverlengthCell {
    /// `None` when the window produced no chunks at all.
    pub fn fraction(&self) -> Option<f64> {
        (self.n_chunks > 0).then(|| self.n_overlength as f64 / self.n_chunks as f64)
    }
}

/// Tokenizer used for each system's chunks.
pub enum TokenizerChoice {
    Shared(Box<dyn Tokenizer>),
    PerSystem(BTreeMap<String, Box<dyn Tokenizer>>),
}

impl TokenizerChoice {
    pub fn for_system(&self, system: &str) -> Result<&dyn Tokenizer> {
        match self {
            TokenizerChoice::Shared(t) => Ok(t.as_ref()),
            TokenizerChoice::PerSystem(map) => map
                .get(system)
                .map(|t| t.as_ref())
                .ok_or_else(|| SlideError::UnknownTokenizer(format!("sidecar for `{system}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub lang_pair: String,
    /// Keyed by `(w, s)`, DROP policy.
    pub dropped: BTreeMap<(usize, usize), DroppedCell>,
    /// Keyed by `w` (with `s = w`, DROP policy), pooled over all systems.
    pub overlength: BTreeMap<usize, OverlengthCell>,
    pub limit: usize,
}

/// Sentences covered by no full window, i.e. lost under the DROP policy.
pub fn dropped_sentences(testset: &TestSet, w: usize, s: usize) -> usize {
    testset
        .documents
        .iter()
        .map(|doc| {
            let d = doc.len();
            match full_window_count(d, w, s) {
                0 => d,
                n => d - ((n - 1) * s + w),
            }
        })
        .sum()
}

pub fn dropped_fraction(testset: &TestSet, w: usize, s: usize) -> f64 {
    dropped_sentences(testset, w, s) as f64 / testset.total_sentences as f64
}

/// Dropped-sentence fractions for every `1 <= s <= w <= w_max` and overlength
/// fractions (count `> limit`) for every `w` at `s = w`.
pub fn corpus_stats(
    testset: &TestSet,
    systems: &[SystemOutput],
    w_max: usize,
    tokenizers: &TokenizerChoice,
    limit: usize,
) -> Result<CorpusStats> {
    if w_max == 0 {
        return Err(SlideError::Config("w_max must be >= 1".into()));
    }
    let dropped = grid_cells(w_max)
        .into_iter()
        .map(|(w, s)| {
            (
                (w, s),
                DroppedCell {
                    dropped: dropped_sentences(testset, w, s),
                    total: testset.total_sentences,
                },
            )
        })
        .collect();

    let mut overlength = BTreeMap::new();
    for w in 1..=w_max {
        let cfg = WindowConfig::new(w, w, PartialPolicy::Drop)?;
        let mut cell = OverlengthCell {
            n_chunks: 0,
            n_overlength: 0,
        };
        for sys in systems {
            let tok = tokenizers.for_system(&sys.system_name)?;
            for doc in &testset.documents {
                for chunk in extract_chunks(doc, testset.hyp_slice(doc, sys), &cfg)? {
                    cell.n_chunks += 1;
                    if tok.count_chunk(&chunk)? > limit {
                        cell.n_overlength += 1;
                    }
                }
            }
        }
        overlength.insert(w, cell);
    }
    Ok(CorpusStats {
        lang_pair: testset.lang_pair.clone(),
        dropped,
        overlength,
        limit,
    })
}
