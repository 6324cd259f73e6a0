use std::collections::HashMap;

use super::{ContextMock, ScoreRequest, ScoreResponse, Scorer};
use crate::error::Result;
use crate::exec::{self, Execution};

#[derive(Debug, Clone)]
pub(crate) enum Builtin {
    Constant(f64),
    LengthRatio,
    LexicalOverlap,
    ContextMock(ContextMock),
}

/// In-process deterministic scorer.
#[derive(Debug, Clone)]
pub struct BuiltinScorer {
    kind: Builtin,
    exec: Execution,
}

impl BuiltinScorer {
    pub(crate) fn new(kind: Builtin, exec: Execution) -> Self {
        BuiltinScorer { kind, exec }
    }

    pub fn score_text(&self, src: &str, hyp: &str) -> f64 {
        match &self.kind {
            Builtin::Constant(c) => *c,
            Builtin::LengthRatio => length_ratio(src, hyp),
            Builtin::LexicalOverlap => lexical_overlap(src, hyp),
            Builtin::ContextMock(mock) => mock.score(src, hyp),
        }
    }
}

impl Scorer for BuiltinScorer {
    fn name(&self) -> &str {
        match self.kind {
            Builtin::Constant(_) => "constant",
            Builtin::LengthRatio => "length_ratio",
            Builtin::LexicalOverlap => "lexical_overlap",
            Builtin::ContextMock(_) => "context_aware_mock",
        }
    }

    fn score_batch(&self, reqs: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
        Ok(exec::map(self.exec, reqs, |r| ScoreResponse {
            request_id: r.request_id,
            score: self.score_text(&r.src_text, &r.hyp_text),
        }))
    }

    fn is_pure(&self) -> bool {
        true
    }
}

/// `min(|hyp|, |src|) / max(|hyp|, |src|)` over whitespace tokens; 1.0 when
/// both sides are empty.
pub fn length_ratio(src: &str, hyp: &str) -> f64 {
    let a = src.split_whitespace().count();
    let b = hyp.split_whitespace().count();
    if a == 0 && b == 0 {
        return 1.0;
    }
    a.min(b) as f64 / a.max(b) as f64
}

/// Dice coefficient of the whitespace token multisets:
/// `2 |src ∩ hyp| / (|src| + |hyp|)`; 1.0 when both sides are empty.
pub fn lexical_overlap(src: &str, hyp: &str) -> f64 {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut n_src = 0;
    for tok in src.split_whitespace() {
        *counts.entry(tok).or_default() += 1;
        n_src += 1;
    }
    let mut n_hyp = 0;
    let mut common = 0;
    for tok in hyp.split_whitespace() {
        n_hyp += 1;
        if let Some(c) = counts.get_mut(tok) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if n_src + n_hyp == 0 {
        return 1.0;
    }
    2.0 * common as f64 / (n_src + n_hyp) as f64
}
