//! `(w, s)` grid sweeps.
//!
//! All cells share one scorer and a chunk-score cache keyed by
//! `(lang_pair, system, document, start, n_sentences)`: every distinct span
//! is scored once, then each cell is aggregated from the cache.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::accuracy::{pairwise_accuracy, AccuracyReport, MetricScores};
use crate::aggregation::{weighted_mean, SystemScore, Weighting};
use crate::corpus::{HumanScores, SystemOutput, TestSet};
use crate::error::{Result, SlideError};
use crate::exec::{self, Execution};
use crate::scoring::{score_batch, ScoreRequest, Scorer};
use crate::windowing::{join_sentences, window_spans, PartialPolicy, Span, WindowConfig};

/// One language pair's test set and the system outputs for it.
#[derive(Debug, Clone)]
pub struct LangPairData {
    pub testset: TestSet,
    pub systems: Vec<SystemOutput>,
}

impl LangPairData {
    pub fn new(testset: TestSet, systems: Vec<SystemOutput>) -> Result<Self> {
        for s in &systems {
            if s.hyp.len() != testset.total_sentences || s.lang_pair != testset.lang_pair {
                return Err(SlideError::Corpus(format!(
                    "system `{}` is not aligned with the {} test set",
                    s.system_name, testset.lang_pair
                )));
            }
        }
        Ok(LangPairData { testset, systems })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridOptions {
    pub partial_policy: PartialPolicy,
    pub weighting: Weighting,
    pub exec: Execution,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            partial_policy: PartialPolicy::Drop,
            weighting: Weighting::Uniform,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GridResult {
    /// Keyed by `(w, s)`; only `s <= w` cells exist.
    pub cells: BTreeMap<(usize, usize), AccuracyReport>,
    pub system_scores: BTreeMap<(usize, usize), Vec<SystemScore>>,
}

impl GridResult {
    /// Cell with the highest pooled accuracy; ties go to the smaller `(w, s)`.
    pub fn best(&self) -> Option<((usize, usize), f64)> {
        self.pooled()
            .into_iter()
            .fold(None, |best, (k, a)| match best {
                Some((_, b)) if b >= a => best,
                _ => Some((k, a)),
            })
    }

    /// Cell with the lowest pooled accuracy; ties go to the smaller `(w, s)`.
    pub fn worst(&self) -> Option<((usize, usize), f64)> {
        self.pooled()
            .into_iter()
            .fold(None, |worst, (k, a)| match worst {
                Some((_, b)) if b <= a => worst,
                _ => Some((k, a)),
            })
    }

    fn pooled(&self) -> Vec<((usize, usize), f64)> {
        self.cells
            .iter()
            .filter_map(|(k, r)| r.accuracy().map(|a| (*k, a)))
            .collect()
    }

    pub fn w_max(&self) -> usize {
        self.cells.keys().map(|k| k.0).max().unwrap_or(0)
    }
}

/// Lower-triangular `(w, s)` cells for `1 <= s <= w <= w_max`, row-major.
pub fn grid_cells(w_max: usize) -> Vec<(usize, usize)> {
    (1..=w_max)
        .flat_map(|w| (1..=w).map(move |s| (w, s)))
        .collect()
}

type SpanKey = (usize, usize, usize); // (doc index, start, n_sentences)

/// Score every distinct span of every cell for one system.
fn score_spans(
    data: &LangPairData,
    sysout: &SystemOutput,
    spans: &[BTreeSet<(usize, usize)>],
    scorer: &dyn Scorer,
) -> Result<HashMap<SpanKey, f64>> {
    let ts = &data.testset;
    let mut keys = Vec::new();
    let mut reqs = Vec::new();
    for (di, doc) in ts.documents.iter().enumerate() {
        let hyp = ts.hyp_slice(doc, sysout);
        for &(start, n) in &spans[di] {
            let range = start..start + n;
            reqs.push(ScoreRequest::new(
                reqs.len() as u64,
                join_sentences(&doc.src[range.clone()]),
                join_sentences(&hyp[range]),
            ));
            keys.push((di, start, n));
        }
    }
    let scores = score_batch(scorer, &reqs)?;
    Ok(keys.into_iter().zip(scores.into_iter().map(|r| r.score)).collect())
}

/// Evaluate an explicit set of `(w, s)` cells.
pub fn run_cells(
    data: &[LangPairData],
    human: &[HumanScores],
    scorer: &dyn Scorer,
    cells: &[(usize, usize)],
    opts: GridOptions,
) -> Result<GridResult> {
    let configs: Vec<((usize, usize), WindowConfig)> = cells
        .iter()
        .map(|&(w, s)| WindowConfig::new(w, s, opts.partial_policy).map(|c| ((w, s), c)))
        .collect::<Result<_>>()?;

    // spans per cell per document, and their union per document
    let mut cell_spans: Vec<Vec<Vec<Vec<Span>>>> = Vec::with_capacity(data.len());
    let mut caches: Vec<Vec<HashMap<SpanKey, f64>>> = Vec::with_capacity(data.len());
    for lp in data {
        let per_cell: Vec<Vec<Vec<Span>>> = configs
            .iter()
            .map(|(_, cfg)| {
                lp.testset
                    .documents
                    .iter()
                    .map(|d| window_spans(d.len(), cfg))
                    .collect()
            })
            .collect();
        let mut union: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); lp.testset.documents.len()];
        for doc_spans in &per_cell {
            for (di, spans) in doc_spans.iter().enumerate() {
                union[di].extend(spans.iter().map(|s| (s.start, s.n_sentences)));
            }
        }
        let cache = lp
            .systems
            .iter()
            .map(|sys| score_spans(lp, sys, &union, scorer))
            .collect::<Result<Vec<_>>>()?;
        cell_spans.push(per_cell);
        caches.push(cache);
    }

    let indices: Vec<usize> = (0..configs.len()).collect();
    let evaluated = exec::try_map(opts.exec, &indices, |&ci| {
        let ((w, s), cfg) = &configs[ci];
        let label = format!("{}/{}", cfg.label(), opts.weighting);
        let mut metric = MetricScores::new();
        let mut sys_scores = Vec::new();
        for (li, lp) in data.iter().enumerate() {
            let doc_spans = &cell_spans[li][ci];
            let n_chunks: usize = doc_spans.iter().map(Vec::len).sum();
            let covered: usize = doc_spans
                .iter()
                .zip(&lp.testset.documents)
                .map(|(spans, d)| d.len() - crate::windowing::uncovered_sentences(d.len(), spans))
                .sum();
            for (si, sys) in lp.systems.iter().enumerate() {
                let cache = &caches[li][si];
                let items = doc_spans.iter().enumerate().flat_map(|(di, spans)| {
                    spans
                        .iter()
                        .map(move |sp| (cache[&(di, sp.start, sp.n_sentences)], sp.n_sentences))
                });
                let value = weighted_mean(items, opts.weighting).map_err(|_| {
                    SlideError::EmptyAggregate(format!(
                        "cell ({w},{s}) has no chunks for {} ({})",
                        sys.system_name, lp.testset.lang_pair
                    ))
                })?;
                metric.insert((lp.testset.lang_pair.clone(), sys.system_name.clone()), value);
                sys_scores.push(SystemScore {
                    system_name: sys.system_name.clone(),
                    lang_pair: lp.testset.lang_pair.clone(),
                    config_label: label.clone(),
                    value,
                    n_chunks,
                    n_sentences_covered: covered,
                });
            }
        }
        let report = pairwise_accuracy(&metric, human, label)?;
        Ok::<_, SlideError>(((*w, *s), report, sys_scores))
    })?;

    let mut result = GridResult::default();
    for (key, report, scores) in evaluated {
        result.cells.insert(key, report);
        result.system_scores.insert(key, scores);
    }
    Ok(result)
}

/// Evaluate every cell `1 <= s <= w <= w_max`. Any failing cell fails the sweep.
pub fn run_grid(
    data: &[LangPairData],
    human: &[HumanScores],
    scorer: &dyn Scorer,
    w_max: usize,
    opts: GridOptions,
) -> Result<GridResult> {
    if w_max == 0 {
        return Err(SlideError::Config("w_max must be >= 1".into()));
    }
    run_cells(data, human, scorer, &grid_cells(w_max), opts)
}
