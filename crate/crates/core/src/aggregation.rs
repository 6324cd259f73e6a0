//! System-level aggregation of chunk scores.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::corpus::{SystemOutput, TestSet};
use crate::error::{Result, SlideError};
use crate::exec::{self, Execution};
use crate::scoring::{score_batch, ScoreRequest, Scorer};
use crate::tokenize::{tokenizer_by_id, Tokenizer};
use crate::windowing::{
    extract_chunks, extract_chunks_token_budget, uncovered_sentences, Chunk, Chunking, Span,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Weighting {
    #[default]
    Uniform,
    SentenceWeighted,
}

impl Weighting {
    pub fn weight(self, n_sentences: usize) -> f64 {
        match self {
            Weighting::Uniform => 1.0,
            Weighting::SentenceWeighted => n_sentences as f64,
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Uniform => "uniform",
            Weighting::SentenceWeighted => "sentence_weighted",
        })
    }
}

impl std::str::FromStr for Weighting {
    type Err = SlideError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "uniform" => Ok(Weighting::Uniform),
            "sentence_weighted" | "weighted" => Ok(Weighting::SentenceWeighted),
            _ => Err(SlideError::Config(format!("unknown weighting `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ChunkScore<'a> {
    pub chunk: &'a Chunk,
    pub score: f64,
}

impl ChunkScore<'_> {
    pub fn weight(&self, mode: Weighting) -> f64 {
        mode.weight(self.chunk.n_sentences)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemScore {
    pub system_name: String,
    pub lang_pair: String,
    /// e.g. `w6s6/DROP/uniform`
    pub config_label: String,
    pub value: f64,
    pub n_chunks: usize,
    pub n_sentences_covered: usize,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Weighted mean of `(score, n_sentences)` pairs, folded in input order.
///
/// Deviations from the first score are accumulated, so a constant input
/// returns that constant exactly.
pub fn weighted_mean<I>(items: I, mode: Weighting) -> Result<f64>
where
    I: IntoIterator<Item = (f64, usize)>,
{
    let mut items = items.into_iter();
    let Some((pivot, n0)) = items.next() else {
        return Err(SlideError::EmptyAggregate(
            "the configuration produced no chunks".into(),
        ));
    };
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    den.add(mode.weight(n0));
    for (score, n) in items {
        let w = mode.weight(n);
        num.add(w * (score - pivot));
        den.add(w);
    }
    let den = den.value();
    if den <= 0.0 {
        return Err(SlideError::EmptyAggregate("total chunk weight is zero".into()));
    }
    Ok(pivot + num.value() / den)
}

pub fn aggregate(chunk_scores: &[ChunkScore<'_>], mode: Weighting) -> Result<f64> {
    weighted_mean(
        chunk_scores.iter().map(|c| (c.score, c.chunk.n_sentences)),
        mode,
    )
}

/// Extract chunks for every document of a system output, in document order.
pub fn extract_testset_chunks(
    testset: &TestSet,
    sysout: &SystemOutput,
    chunking: &Chunking,
    tokenizer: Option<&dyn Tokenizer>,
    exec: Execution,
) -> Result<Vec<Chunk>> {
    if sysout.hyp.len() != testset.total_sentences {
        return Err(SlideError::LengthMismatch {
            what: format!("system `{}`", sysout.system_name),
            expected: testset.total_sentences,
            actual: sysout.hyp.len(),
        });
    }
    let owned;
    let tok: Option<&dyn Tokenizer> = match (chunking, tokenizer) {
        (Chunking::Tokens(cfg), None) => {
            owned = tokenizer_by_id(&cfg.tokenizer_id)?;
            Some(owned.as_ref())
        }
        (_, t) => t,
    };
    let per_doc = exec::try_map(exec, &testset.documents, |doc| {
        let hyp = testset.hyp_slice(doc, sysout);
        match chunking {
            Chunking::Sentences(cfg) => extract_chunks(doc, hyp, cfg),
            Chunking::Tokens(cfg) => {
                extract_chunks_token_budget(doc, hyp, cfg, tok.expect("resolved above"))
            }
        }
    })?;
    Ok(per_doc.into_iter().flatten().collect())
}

/// Distinct sentences covered by at least one chunk.
pub fn covered_sentences(testset: &TestSet, chunks: &[Chunk]) -> usize {
    let mut covered = 0;
    let mut i = 0;
    for doc in &testset.documents {
        let mut spans: Vec<Span> = Vec::new();
        while i < chunks.len() && chunks[i].doc_id == doc.doc_id {
            spans.push(chunks[i].span());
            i += 1;
        }
        covered += doc.len() - uncovered_sentences(doc.len(), &spans);
    }
    covered
}

/// A scored system together with its per-chunk detail.
#[derive(Debug, Clone)]
pub struct ScoredSystem {
    pub score: SystemScore,
    pub chunks: Vec<Chunk>,
    pub chunk_scores: Vec<f64>,
}

pub fn score_system_detailed(
    testset: &TestSet,
    sysout: &SystemOutput,
    chunking: &Chunking,
    scorer: &dyn Scorer,
    mode: Weighting,
    tokenizer: Option<&dyn Tokenizer>,
) -> Result<ScoredSystem> {
    let chunks =
        extract_testset_chunks(testset, sysout, chunking, tokenizer, Execution::default())?;
    if chunks.is_empty() {
        return Err(SlideError::EmptyAggregate(format!(
            "{} dropped every sentence of {} ({})",
            chunking.label(),
            sysout.system_name,
            testset.lang_pair
        )));
    }
    let reqs: Vec<ScoreRequest> = chunks
        .iter()
        .enumerate()
        .map(|(i, c)| ScoreRequest::new(i as u64, c.src_text.clone(), c.hyp_text.clone()))
        .collect();
    let chunk_scores: Vec<f64> = score_batch(scorer, &reqs)?
        .into_iter()
        .map(|r| r.score)
        .collect();
    let value = weighted_mean(
        chunk_scores
            .iter()
            .zip(&chunks)
            .map(|(&s, c)| (s, c.n_sentences)),
        mode,
    )?;
    let score = SystemScore {
        system_name: sysout.system_name.clone(),
        lang_pair: testset.lang_pair.clone(),
        config_label: format!("{}/{}", chunking.label(), mode),
        value,
        n_chunks: chunks.len(),
        n_sentences_covered: covered_sentences(testset, &chunks),
    };
    Ok(ScoredSystem {
        score,
        chunks,
        chunk_scores,
    })
}

pub fn score_system(
    testset: &TestSet,
    sysout: &SystemOutput,
    chunking: &Chunking,
    scorer: &dyn Scorer,
    mode: Weighting,
) -> Result<SystemScore> {
    score_system_detailed(testset, sysout, chunking, scorer, mode, None).map(|s| s.score)
}

/// Audit dump: `doc_id, start, n_sentences, is_partial, score` per chunk.
pub fn write_score_dump(path: &Path, scored: &ScoredSystem) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| SlideError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| SlideError::io(path, e);
    writeln!(out, "doc_id\tstart\tn_sentences\tis_partial\tscore").map_err(io)?;
    for (c, s) in scored.chunks.iter().zip(&scored.chunk_scores) {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            c.doc_id, c.start, c.n_sentences, c.is_partial, s
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}
