//! Chunk extraction over documents.
//!
//! A window of `w` sentences is placed at the start of each document and
//! advanced by `s` sentences while it fits. Windows never cross a document
//! boundary. Sentences that no full window covers are either dropped or
//! emitted as a single partial chunk per document (the tail, or the whole
//! document when it is shorter than `w`).

use std::fmt;

use crate::corpus::{Document, Sentence};
use crate::error::{Result, SlideError};
use crate::tokenize::{Side, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PartialPolicy {
    #[default]
    Drop,
    Include,
}

impl fmt::Display for PartialPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartialPolicy::Drop => "DROP",
            PartialPolicy::Include => "INCLUDE",
        })
    }
}

impl std::str::FromStr for PartialPolicy {
    type Err = SlideError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "drop" => Ok(PartialPolicy::Drop),
            "include" => Ok(PartialPolicy::Include),
            _ => Err(SlideError::Config(format!("unknown partial policy `{s}`"))),
        }
    }
}

/// Fixed sentence window. Invariant: `1 <= stride <= window`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowConfig {
    window: usize,
    stride: usize,
    pub partial_policy: PartialPolicy,
}

impl WindowConfig {
    pub fn new(window: usize, stride: usize, partial_policy: PartialPolicy) -> Result<Self> {
        if stride == 0 || window == 0 || stride > window {
            return Err(SlideError::Config(format!(
                "need 1 <= s <= w, got w={window} s={stride}"
            )));
        }
        Ok(WindowConfig {
            window,
            stride,
            partial_policy,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// e.g. `w6s6/DROP`
    pub fn label(&self) -> String {
        format!("w{}s{}/{}", self.window, self.stride, self.partial_policy)
    }
}

/// Token-budget window: chunks grow sentence by sentence up to `max_tokens`,
/// the stride stays in sentences.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenWindowConfig {
    max_tokens: usize,
    stride: usize,
    pub tokenizer_id: String,
}

impl TokenWindowConfig {
    pub fn new(max_tokens: usize, stride: usize, tokenizer_id: impl Into<String>) -> Result<Self> {
        if max_tokens == 0 {
            return Err(SlideError::Config("token budget must be >= 1".into()));
        }
        if stride == 0 {
            return Err(SlideError::Config("stride must be >= 1".into()));
        }
        Ok(TokenWindowConfig {
            max_tokens,
            stride,
            tokenizer_id: tokenizer_id.into(),
        })
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn label(&self) -> String {
        format!("t{}s{}/{}", self.max_tokens, self.stride, self.tokenizer_id)
    }
}

/// Either kind of chunking configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Chunking {
    Sentences(WindowConfig),
    Tokens(TokenWindowConfig),
}

impl Chunking {
    pub fn label(&self) -> String {
        match self {
            Chunking::Sentences(c) => c.label(),
            Chunking::Tokens(c) => c.label(),
        }
    }
}

impl From<WindowConfig> for Chunking {
    fn from(c: WindowConfig) -> Self {
        Chunking::Sentences(c)
    }
}

impl From<TokenWindowConfig> for Chunking {
    fn from(c: TokenWindowConfig) -> Self {
        Chunking::Tokens(c)
    }
}

/// Sentence range of a chunk within its document, without text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub n_sentences: usize,
    pub is_partial: bool,
}

impl Span {
    pub fn end(&self) -> usize {
        self.start + self.n_sentences
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chunk {
    pub doc_id: String,
    /// 0-based sentence index within the document.
    pub start: usize,
    pub n_sentences: usize,
    pub src_text: String,
    pub hyp_text: String,
    pub is_partial: bool,
}

impl Chunk {
    pub fn from_span(doc: &Document, hyp: &[Sentence], span: Span) -> Chunk {
        let range = span.start..span.end();
        Chunk {
            doc_id: doc.doc_id.clone(),
            start: span.start,
            n_sentences: span.n_sentences,
            src_text: join_sentences(&doc.src[range.clone()]),
            hyp_text: join_sentences(&hyp[range]),
            is_partial: span.is_partial,
        }
    }

    pub fn span(&self) -> Span {
        Span {
            start: self.start,
            n_sentences: self.n_sentences,
            is_partial: self.is_partial,
        }
    }
}

/// Join with exactly one space; empty sentences still contribute a separator.
pub fn join_sentences(sentences: &[Sentence]) -> String {
    let len = sentences.iter().map(|s| s.as_str().len() + 1).sum::<usize>();
    let mut out = String::with_capacity(len);
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(s.as_str());
    }
    out
}

/// Number of full windows of size `window` and stride `stride` in a document of `d` sentences.
pub fn full_window_count(d: usize, window: usize, stride: usize) -> usize {
    if d < window {
        0
    } else {
        (d - window) / stride + 1
    }
}

/// Window placements for a document of length `d`, in ascending start order.
pub fn window_spans(d: usize, cfg: &WindowConfig) -> Vec<Span> {
    let (w, s) = (cfg.window, cfg.stride);
    let n_full = full_window_count(d, w, s);
    let mut spans: Vec<Span> = (0..n_full)
        .map(|k| Span {
            start: k * s,
            n_sentences: w,
            is_partial: false,
        })
        .collect();
    if cfg.partial_policy == PartialPolicy::Include {
        let covered = spans.last().map_or(0, Span::end);
        if covered < d {
            spans.push(Span {
                start: covered,
                n_sentences: d - covered,
                is_partial: true,
            });
        }
    }
    spans
}

fn check_aligned(doc: &Document, hyp: &[Sentence]) -> Result<()> {
    if hyp.len() != doc.len() {
        return Err(SlideError::LengthMismatch {
            what: format!("hypothesis slice for document `{}`", doc.doc_id),
            expected: doc.len(),
            actual: hyp.len(),
        });
    }
    Ok(())
}

pub fn extract_chunks(doc: &Document, hyp: &[Sentence], cfg: &WindowConfig) -> Result<Vec<Chunk>> {
    check_aligned(doc, hyp)?;
    Ok(window_spans(doc.len(), cfg)
        .into_iter()
        .map(|span| Chunk::from_span(doc, hyp, span))
        .collect())
}

/// Greedy token-budget placements given the token count of each
/// (source, hypothesis) sentence pair.
///
/// From each start the chunk takes sentences while the running total stays
/// within `max_tokens`. A pair that alone exceeds the budget becomes a
/// one-sentence chunk flagged partial. The start then advances by `stride`;
/// extraction stops once a chunk reaches the end of the document.
pub fn token_budget_spans(pair_tokens: &[usize], max_tokens: usize, stride: usize) -> Vec<Span> {
    let d = pair_tokens.len();
    let mut spans = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start;
        let mut total = 0usize;
        while end < d && total + pair_tokens[end] <= max_tokens {
            total += pair_tokens[end];
            end += 1;
        }
        let span = if end == start {
            Span {
                start,
                n_sentences: 1,
                is_partial: true,
            }
        } else {
            Span {
                start,
                n_sentences: end - start,
                is_partial: false,
            }
        };
        spans.push(span);
        if span.end() >= d {
            break;
        }
        start += stride;
    }
    spans
}

/// Per-sentence-pair token counts for a document.
pub fn pair_token_counts(doc: &Document, hyp: &[Sentence], tok: &dyn Tokenizer) -> Result<Vec<usize>> {
    check_aligned(doc, hyp)?;
    doc.src
        .iter()
        .zip(hyp)
        .enumerate()
        .map(|(i, (src, hyp))| {
            Ok(tok.count_sentence(&doc.doc_id, i, Side::Source, src.as_str())?
                + tok.count_sentence(&doc.doc_id, i, Side::Hypothesis, hyp.as_str())?)
        })
        .collect()
}

pub fn extract_chunks_token_budget(
    doc: &Document,
    hyp: &[Sentence],
    cfg: &TokenWindowConfig,
    tok: &dyn Tokenizer,
) -> Result<Vec<Chunk>> {
    if cfg.tokenizer_id != tok.id() {
        return Err(SlideError::Config(format!(
            "window expects tokenizer `{}` but `{}` was supplied",
            cfg.tokenizer_id,
            tok.id()
        )));
    }
    let counts = pair_token_counts(doc, hyp, tok)?;
    Ok(token_budget_spans(&counts, cfg.max_tokens, cfg.stride)
        .into_iter()
        .map(|span| Chunk::from_span(doc, hyp, span))
        .collect())
}

/// Number of sentences in `0..d` covered by no span.
pub fn uncovered_sentences(d: usize, spans: &[Span]) -> usize {
    let mut covered = vec![false; d];
    for span in spans {
        covered[span.start..span.end()].fill(true);
    }
    covered.iter().filter(|c| !**c).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::WhitespaceTokenizer;

    fn doc(n: usize) -> (Document, Vec<Sentence>) {
        let src = (0..n).map(|i| Sentence::new(format!("s{i}")).unwrap()).collect();
        let hyp = (0..n).map(|i| Sentence::new(format!("h{i}")).unwrap()).collect();
        (
            Document {
                doc_id: "doc".into(),
                src,
                offset: 0,
            },
            hyp,
        )
    }

    fn starts(chunks: &[Chunk]) -> Vec<(usize, usize, bool)> {
        chunks
            .iter()
            .map(|c| (c.start, c.n_sentences, c.is_partial))
            .collect()
    }

    #[test]
    fn stride_must_not_exceed_window() {
        assert!(WindowConfig::new(2, 3, PartialPolicy::Drop).is_err());
        assert!(WindowConfig::new(0, 0, PartialPolicy::Drop).is_err());
        assert!(WindowConfig::new(3, 0, PartialPolicy::Drop).is_err());
        assert!(WindowConfig::new(3, 3, PartialPolicy::Drop).is_ok());
        assert!(TokenWindowConfig::new(0, 1, "whitespace").is_err());
    }

    #[test]
    fn seven_sentences_w4_s2() {
        let (d, h) = doc(7);
        let drop = extract_chunks(&d, &h, &WindowConfig::new(4, 2, PartialPolicy::Drop).unwrap()).unwrap();
        assert_eq!(starts(&drop), vec![(0, 4, false), (2, 4, false)]);
        assert_eq!(drop[0].src_text, "s0 s1 s2 s3");
        assert_eq!(drop[1].hyp_text, "h2 h3 h4 h5");

        let incl =
            extract_chunks(&d, &h, &WindowConfig::new(4, 2, PartialPolicy::Include).unwrap()).unwrap();
        assert_eq!(
            starts(&incl),
            vec![(0, 4, false), (2, 4, false), (6, 1, true)]
        );
    }

    #[test]
    fn short_document() {
        let (d, h) = doc(3);
        let drop = extract_chunks(&d, &h, &WindowConfig::new(4, 2, PartialPolicy::Drop).unwrap()).unwrap();
        assert!(drop.is_empty());
        let incl =
            extract_chunks(&d, &h, &WindowConfig::new(4, 2, PartialPolicy::Include).unwrap()).unwrap();
        assert_eq!(starts(&incl), vec![(0, 3, true)]);
    }

    #[test]
    fn sentence_level_degenerate_case() {
        let (d, h) = doc(6);
        for policy in [PartialPolicy::Drop, PartialPolicy::Include] {
            let chunks = extract_chunks(&d, &h, &WindowConfig::new(1, 1, policy).unwrap()).unwrap();
            assert_eq!(chunks.len(), 6);
            for (i, c) in chunks.iter().enumerate() {
                assert_eq!(c.src_text, d.src[i].as_str());
                assert!(!c.is_partial);
            }
        }
    }

    #[test]
    fn misaligned_hypothesis_is_an_error() {
        let (d, mut h) = doc(4);
        h.pop();
        let cfg = WindowConfig::new(2, 1, PartialPolicy::Drop).unwrap();
        assert!(matches!(
            extract_chunks(&d, &h, &cfg),
            Err(SlideError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn join_keeps_empty_sentences() {
        let s: Vec<Sentence> = ["a", "", "b"].iter().map(|t| Sentence::new(*t).unwrap()).collect();
        assert_eq!(join_sentences(&s), "a  b");
        assert_eq!(join_sentences(&[]), "");
    }

    #[test]
    fn token_budget_examples() {
        assert_eq!(
            token_budget_spans(&[100, 100, 100, 100], 250, 2),
            vec![
                Span { start: 0, n_sentences: 2, is_partial: false },
                Span { start: 2, n_sentences: 2, is_partial: false },
            ]
        );
        assert_eq!(
            token_budget_spans(&[300], 250, 1),
            vec![Span { start: 0, n_sentences: 1, is_partial: true }]
        );
        assert_eq!(
            token_budget_spans(&[5, 7, 9, 2, 4], usize::MAX / 2, 5),
            vec![Span { start: 0, n_sentences: 5, is_partial: false }]
        );
    }

    #[test]
    fn token_budget_stride_can_skip() {
        // chunk holds one sentence, stride 3 jumps over two
        let spans = token_budget_spans(&[10, 10, 10, 10, 10], 10, 3);
        assert_eq!(spans.iter().map(|s| s.start).collect::<Vec<_>>(), vec![0, 3]);
        assert_eq!(uncovered_sentences(5, &spans), 3);
    }

    #[test]
    fn token_budget_chunks_use_tokenizer() {
        let src: Vec<Sentence> = ["a b c", "d e", "f"].iter().map(|t| Sentence::new(*t).unwrap()).collect();
        let hyp: Vec<Sentence> = ["A B", "C", "D E F G"].iter().map(|t| Sentence::new(*t).unwrap()).collect();
        let d = Document {
            doc_id: "x".into(),
            src,
            offset: 0,
        };
        // pair counts 5, 3, 5
        let cfg = TokenWindowConfig::new(8, 1, "whitespace").unwrap();
        let chunks = extract_chunks_token_budget(&d, &hyp, &cfg, &WhitespaceTokenizer).unwrap();
        assert_eq!(starts(&chunks), vec![(0, 2, false), (1, 2, false)]);
        assert_eq!(chunks[0].src_text, "a b c d e");

        let wrong = TokenWindowConfig::new(8, 1, "chars").unwrap();
        assert!(extract_chunks_token_budget(&d, &hyp, &wrong, &WhitespaceTokenizer).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(
            WindowConfig::new(6, 6, PartialPolicy::Drop).unwrap().label(),
            "w6s6/DROP"
        );
        assert_eq!(
            TokenWindowConfig::new(500, 1, "whitespace").unwrap().label(),
            "t500s1/whitespace"
        );
    }
}
