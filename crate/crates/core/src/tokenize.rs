//! Token counting for budgeted chunking and overlength statistics.
//!
//! Two tokenizers are built in: `whitespace` (Unicode whitespace split) and
//! `chars` (Unicode scalar count). Subword counts from an external
//! tokenizer can be supplied through a sidecar TSV.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Result, SlideError};
use crate::windowing::Chunk;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Hypothesis,
}

pub trait Tokenizer: Send + Sync {
    fn id(&self) -> &str;

    /// Token count of one sentence at `index` within document `doc_id`.
    fn count_sentence(&self, doc_id: &str, index: usize, side: Side, text: &str) -> Result<usize>;

    /// Combined token count of a chunk's source and hypothesis text.
    fn count_chunk(&self, chunk: &Chunk) -> Result<usize>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl WhitespaceTokenizer {
    pub fn count(text: &str) -> usize {
        text.split_whitespace().count()
    }
}

impl Tokenizer for WhitespaceTokenizer {
    fn id(&self) -> &str {
        "whitespace"
    }

    fn count_sentence(&self, _: &str, _: usize, _: Side, text: &str) -> Result<usize> {
        Ok(Self::count(text))
    }

    fn count_chunk(&self, chunk: &Chunk) -> Result<usize> {
        Ok(Self::count(&chunk.src_text) + Self::count(&chunk.hyp_text))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CharTokenizer;

impl Tokenizer for CharTokenizer {
    fn id(&self) -> &str {
        "chars"
    }

    fn count_sentence(&self, _: &str, _: usize, _: Side, text: &str) -> Result<usize> {
        Ok(text.chars().count())
    }

    fn count_chunk(&self, chunk: &Chunk) -> Result<usize> {
        Ok(chunk.src_text.chars().count() + chunk.hyp_text.chars().count())
    }
}

/// Precomputed per-sentence counts keyed by `(doc_id, sentence_index)`.
///
/// File format: TSV with header `doc_id<TAB>sentence_index<TAB>src_tokens<TAB>hyp_tokens`,
/// one row per sentence. Sentence indices are 0-based within the document.
/// Counts are per system output, so one sidecar serves one system.
#[derive(Debug, Clone)]
pub struct SidecarTokenizer {
    id: String,
    counts: HashMap<(String, usize), (usize, usize)>,
}

impl SidecarTokenizer {
    pub fn new(id: impl Into<String>, counts: HashMap<(String, usize), (usize, usize)>) -> Self {
        SidecarTokenizer {
            id: id.into(),
            counts,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .quoting(false)
            .from_path(path)
            .map_err(|e| SlideError::format(path, e.to_string()))?;
        let headers = reader
            .headers()
            .map_err(|e| SlideError::format(path, e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["doc_id", "sentence_index", "src_tokens", "hyp_tokens"]
        {
            return Err(SlideError::format(
                path,
                "expected header `doc_id\\tsentence_index\\tsrc_tokens\\thyp_tokens`",
            ));
        }
        let mut counts = HashMap::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| SlideError::format(path, e.to_string()))?;
            let parse = |col: usize| -> Result<usize> {
                record[col].trim().parse().map_err(|_| {
                    SlideError::format(path, format!("line {}: bad count `{}`", i + 2, &record[col]))
                })
            };
            let key = (record[0].to_owned(), parse(1)?);
            if counts.insert(key, (parse(2)?, parse(3)?)).is_some() {
                return Err(SlideError::format(
                    path,
                    format!("line {}: duplicate sentence", i + 2),
                ));
            }
        }
        Ok(SidecarTokenizer::new(
            format!("sidecar:{}", path.display()),
            counts,
        ))
    }

    fn lookup(&self, doc_id: &str, index: usize) -> Result<(usize, usize)> {
        self.counts
            .get(&(doc_id.to_owned(), index))
            .copied()
            .ok_or_else(|| SlideError::MissingTokenCount {
                doc_id: doc_id.to_owned(),
                index,
            })
    }
}

impl Tokenizer for SidecarTokenizer {
    fn id(&self) -> &str {
        &self.id
    }

    fn count_sentence(&self, doc_id: &str, index: usize, side: Side, _: &str) -> Result<usize> {
        let (src, hyp) = self.lookup(doc_id, index)?;
        Ok(match side {
            Side::Source => src,
            Side::Hypothesis => hyp,
        })
    }

    fn count_chunk(&self, chunk: &Chunk) -> Result<usize> {
        (chunk.start..chunk.start + chunk.n_sentences).try_fold(0, |acc, i| {
            let (src, hyp) = self.lookup(&chunk.doc_id, i)?;
            Ok(acc + src + hyp)
        })
    }
}

/// Resolve a built-in tokenizer by id.
pub fn tokenizer_by_id(id: &str) -> Result<Box<dyn Tokenizer>> {
    match id {
        "whitespace" => Ok(Box::new(WhitespaceTokenizer)),
        "chars" => Ok(Box::new(CharTokenizer)),
        other => Err(SlideError::UnknownTokenizer(other.to_owned())),
    }
}

/// Combined source + hypothesis token count of a chunk.
pub fn count_tokens(chunk: &Chunk, tok: &dyn Tokenizer) -> Result<usize> {
    tok.count_chunk(chunk)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(src: &str, hyp: &str) -> Chunk {
        Chunk {
            doc_id: "d".into(),
            start: 0,
            n_sentences: 1,
            src_text: src.into(),
            hyp_text: hyp.into(),
            is_partial: false,
        }
    }

    #[test]
    fn whitespace_counts() {
        assert_eq!(count_tokens(&chunk("a b", "c"), &WhitespaceTokenizer).unwrap(), 3);
        assert_eq!(count_tokens(&chunk("", ""), &WhitespaceTokenizer).unwrap(), 0);
        assert_eq!(count_tokens(&chunk("a\u{3000}b  c", ""), &WhitespaceTokenizer).unwrap(), 3);
    }

    #[test]
    fn chars_counts_scalars() {
        assert_eq!(count_tokens(&chunk("né", "ü"), &CharTokenizer).unwrap(), 3);
    }

    #[test]
    fn registry() {
        assert_eq!(tokenizer_by_id("whitespace").unwrap().id(), "whitespace");
        assert_eq!(tokenizer_by_id("chars").unwrap().id(), "chars");
        assert!(matches!(
            tokenizer_by_id("sentencepiece"),
            Err(SlideError::UnknownTokenizer(_))
        ));
    }

    #[test]
    fn sidecar_sums_over_chunk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tok.tsv");
        std::fs::write(
            &p,
            "doc_id\tsentence_index\tsrc_tokens\thyp_tokens\nd\t0\t3\t4\nd\t1\t10\t2\n",
        )
        .unwrap();
        let tok = SidecarTokenizer::load(&p).unwrap();
        let mut c = chunk("ignored", "ignored");
        c.n_sentences = 2;
        assert_eq!(tok.count_chunk(&c).unwrap(), 19);
        c.n_sentences = 3;
        assert!(matches!(
            tok.count_chunk(&c),
            Err(SlideError::MissingTokenCount { index: 2, .. })
        ));
    }
}
