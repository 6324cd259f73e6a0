//! Document-annotated parallel test sets.
//!
//! The canonical on-disk format is WMT style: a source file with one segment
//! per line and a parallel docid file naming the document of each line.
//! System outputs are one hypothesis per line, aligned with the source.
//! Text is kept byte-for-byte; only the `\n` terminator is stripped.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Result, SlideError};

/// One segment. Never contains a newline; may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Sentence(String);

impl Sentence {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.contains('\n') {
            return Err(SlideError::Corpus(format!(
                "sentence contains a newline: {text:?}"
            )));
        }
        Ok(Sentence(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Sentence {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub src: Vec<Sentence>,
    /// Index of this document's first sentence in the test set.
    pub offset: usize,
}

impl Document {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    /// Sentence index range of this document within the test set.
    pub fn span(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.src.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSet {
    pub lang_pair: String,
    pub documents: Vec<Document>,
    pub total_sentences: usize,
}

impl TestSet {
    /// Build a test set from `(doc_id, sentences)` groups, in order.
    pub fn from_documents<I, S>(lang_pair: impl Into<String>, docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<Sentence>)>,
        S: Into<String>,
    {
        let mut documents = Vec::new();
        let mut seen = HashSet::new();
        let mut offset = 0;
        for (doc_id, src) in docs {
            let doc_id = doc_id.into();
            if src.is_empty() {
                return Err(SlideError::Corpus(format!("document `{doc_id}` is empty")));
            }
            if !seen.insert(doc_id.clone()) {
                return Err(SlideError::Corpus(format!(
                    "document id `{doc_id}` appears more than once"
                )));
            }
            let len = src.len();
            documents.push(Document {
                doc_id,
                src,
                offset,
            });
            offset += len;
        }
        if documents.is_empty() {
            return Err(SlideError::Corpus("test set has no documents".into()));
        }
        Ok(TestSet {
            lang_pair: lang_pair.into(),
            documents,
            total_sentences: offset,
        })
    }

    /// Group aligned `(doc_id, sentence)` lines into documents made of
    /// maximal runs of identical ids.
    pub fn from_lines(
        lang_pair: impl Into<String>,
        src: Vec<String>,
        docids: Vec<String>,
    ) -> Result<Self> {
        if src.len() != docids.len() {
            return Err(SlideError::LengthMismatch {
                what: "docid file".into(),
                expected: src.len(),
                actual: docids.len(),
            });
        }
        if src.is_empty() {
            return Err(SlideError::Corpus("empty input".into()));
        }
        let mut groups: Vec<(String, Vec<Sentence>)> = Vec::new();
        let mut closed: HashSet<String> = HashSet::new();
        for (line_no, (text, id)) in src.into_iter().zip(docids).enumerate() {
            match groups.last_mut() {
                Some((current, sents)) if *current == id => sents.push(Sentence::new(text)?),
                _ => {
                    if closed.contains(&id) {
                        return Err(SlideError::Corpus(format!(
                            "doc_id `{id}` reappears non-consecutively at line {}",
                            line_no + 1
                        )));
                    }
                    if let Some((prev, _)) = groups.last() {
                        closed.insert(prev.clone());
                    }
                    groups.push((id, vec![Sentence::new(text)?]));
                }
            }
        }
        TestSet::from_documents(lang_pair, groups)
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flat_map(|d| d.src.iter())
    }

    /// Hypothesis sentences aligned with `doc`.
    pub fn hyp_slice<'a>(&self, doc: &Document, sysout: &'a SystemOutput) -> &'a [Sentence] {
        &sysout.hyp[doc.span()]
    }

    pub fn document_lengths(&self) -> Vec<usize> {
        self.documents.iter().map(Document::len).collect()
    }

    /// Write the source and docid files back out; the inverse of [`load_testset`].
    pub fn write(&self, source_path: &Path, docid_path: &Path) -> Result<()> {
        write_lines(source_path, self.sentences().map(Sentence::as_str))?;
        write_lines(
            docid_path,
            self.documents
                .iter()
                .flat_map(|d| std::iter::repeat(d.doc_id.as_str()).take(d.len())),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemOutput {
    pub system_name: String,
    pub lang_pair: String,
    pub hyp: Vec<Sentence>,
}

impl SystemOutput {
    pub fn new(
        system_name: impl Into<String>,
        testset: &TestSet,
        hyp: Vec<Sentence>,
    ) -> Result<Self> {
        let system_name = system_name.into();
        if hyp.len() != testset.total_sentences {
            return Err(SlideError::LengthMismatch {
                what: format!("system `{system_name}`"),
                expected: testset.total_sentences,
                actual: hyp.len(),
            });
        }
        Ok(SystemOutput {
            system_name,
            lang_pair: testset.lang_pair.clone(),
            hyp,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_lines(path, self.hyp.iter().map(Sentence::as_str))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JudgmentStyle {
    Mqm,
    DaSqm,
    #[default]
    Other,
}

impl std::str::FromStr for JudgmentStyle {
    type Err = SlideError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mqm" => Ok(JudgmentStyle::Mqm),
            "da+sqm" | "da_sqm" | "dasqm" => Ok(JudgmentStyle::DaSqm),
            "other" | "" => Ok(JudgmentStyle::Other),
            _ => Err(SlideError::Corpus(format!("unknown judgment style `{s}`"))),
        }
    }
}

impl std::fmt::Display for JudgmentStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            JudgmentStyle::Mqm => "MQM",
            JudgmentStyle::DaSqm => "DA+SQM",
            JudgmentStyle::Other => "OTHER",
        })
    }
}

/// Human system-level scores for one language pair. Higher is better.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanScores {
    pub lang_pair: String,
    pub scores: BTreeMap<String, f64>,
    pub judgment_style: JudgmentStyle,
}

impl HumanScores {
    /// Check that every scored system has an output for this language pair.
    pub fn check_systems<'a>(&self, systems: impl IntoIterator<Item = &'a SystemOutput>) -> Result<()> {
        let names: HashSet<&str> = systems
            .into_iter()
            .filter(|s| s.lang_pair == self.lang_pair)
            .map(|s| s.system_name.as_str())
            .collect();
        for name in self.scores.keys() {
            if !names.contains(name.as_str()) {
                return Err(SlideError::Corpus(format!(
                    "human score for `{name}` ({}) has no system output",
                    self.lang_pair
                )));
            }
        }
        Ok(())
    }
}

/// Read a line-oriented UTF-8 file. One trailing `\n` is optional; nothing
/// else is stripped.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| SlideError::io(path, e))?;
    let text =
        String::from_utf8(bytes).map_err(|e| SlideError::format(path, format!("not UTF-8: {e}")))?;
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let body = text.strip_suffix('\n').unwrap_or(&text);
    Ok(body.split('\n').map(str::to_owned).collect())
}

/// Write lines, each terminated by exactly one `\n`.
pub fn write_lines<'a>(path: &Path, lines: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| SlideError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for line in lines {
        out.write_all(line.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| SlideError::io(path, e))?;
    }
    out.flush().map_err(|e| SlideError::io(path, e))
}

pub fn load_testset(source_path: &Path, docid_path: &Path, lang_pair: &str) -> Result<TestSet> {
    let src = read_lines(source_path)?;
    let ids = read_lines(docid_path)?;
    if src.is_empty() {
        return Err(SlideError::format(source_path, "empty input"));
    }
    TestSet::from_lines(lang_pair, src, ids).map_err(|e| match e {
        SlideError::LengthMismatch { expected, actual, .. } => SlideError::format(
            docid_path,
            format!("has {actual} lines but the source has {expected}"),
        ),
        SlideError::Corpus(msg) => SlideError::format(docid_path, msg),
        other => other,
    })
}

pub fn load_system_output(path: &Path, testset: &TestSet, system_name: &str) -> Result<SystemOutput> {
    let hyp = read_lines(path)?
        .into_iter()
        .map(Sentence::new)
        .collect::<Result<Vec<_>>>()?;
    SystemOutput::new(system_name, testset, hyp).map_err(|e| match e {
        SlideError::LengthMismatch { expected, actual, .. } => SlideError::format(
            path,
            format!("has {actual} lines but the test set has {expected} sentences"),
        ),
        other => other,
    })
}

/// Load a `lang_pair<TAB>system<TAB>score` table (optionally with a fourth
/// `style` column). Returns one entry per language pair, sorted by name.
pub fn load_human_scores(path: &Path) -> Result<Vec<HumanScores>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(false)
        .from_path(path)
        .map_err(|e| SlideError::format(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| SlideError::format(path, e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    let has_style = match cols.as_slice() {
        ["lang_pair", "system", "score"] => false,
        ["lang_pair", "system", "score", "style"] => true,
        _ => {
            return Err(SlideError::format(
                path,
                "expected header `lang_pair\\tsystem\\tscore`",
            ))
        }
    };

    let mut by_pair: BTreeMap<String, HumanScores> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| SlideError::format(path, e.to_string()))?;
        let (lp, system, raw) = (&record[0], &record[1], &record[2]);
        let score: f64 = raw
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| {
                SlideError::format(path, format!("line {line}: score `{raw}` is not a number"))
            })?;
        let style: JudgmentStyle = if has_style {
            record[3].parse()?
        } else {
            JudgmentStyle::Other
        };
        let entry = by_pair.entry(lp.to_owned()).or_insert_with(|| HumanScores {
            lang_pair: lp.to_owned(),
            scores: BTreeMap::new(),
            judgment_style: style,
        });
        if entry.scores.insert(system.to_owned(), score).is_some() {
            return Err(SlideError::format(
                path,
                format!("line {line}: duplicate row for ({lp}, {system})"),
            ));
        }
    }
    Ok(by_pair.into_values().collect())
}

pub fn write_human_scores(path: &Path, human: &[HumanScores]) -> Result<()> {
    let mut lines = vec!["lang_pair\tsystem\tscore".to_owned()];
    for hs in human {
        for (system, score) in &hs.scores {
            lines.push(format!("{}\t{}\t{}", hs.lang_pair, system, score));
        }
    }
    write_lines(path, lines.iter().map(String::as_str))
}

#[derive(Deserialize)]
struct JsonlRecord {
    doc_id: String,
    src: String,
    #[serde(default)]
    hyp: BTreeMap<String, String>,
}

/// Load the single-file JSON-lines format: one object per sentence with
/// `doc_id`, `src` and a `hyp` map from system name to hypothesis.
pub fn load_jsonl(path: &Path, lang_pair: &str) -> Result<(TestSet, Vec<SystemOutput>)> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(SlideError::format(path, "empty input"));
    }
    let mut src = Vec::with_capacity(lines.len());
    let mut ids = Vec::with_capacity(lines.len());
    let mut hyps: BTreeMap<String, Vec<Sentence>> = BTreeMap::new();
    for (i, line) in lines.iter().enumerate() {
        let rec: JsonlRecord = serde_json::from_str(line)
            .map_err(|e| SlideError::format(path, format!("line {}: {e}", i + 1)))?;
        if i == 0 {
            hyps = rec.hyp.keys().map(|k| (k.clone(), Vec::new())).collect();
        } else if !rec.hyp.keys().eq(hyps.keys()) {
            return Err(SlideError::format(
                path,
                format!("line {}: system set differs from line 1", i + 1),
            ));
        }
        for (system, text) in rec.hyp {
            hyps.get_mut(&system).unwrap().push(Sentence::new(text)?);
        }
        src.push(rec.src);
        ids.push(rec.doc_id);
    }
    let testset = TestSet::from_lines(lang_pair, src, ids)
        .map_err(|e| SlideError::format(path, e.to_string()))?;
    let systems = hyps
        .into_iter()
        .map(|(name, hyp)| SystemOutput::new(name, &testset, hyp))
        .collect::<Result<Vec<_>>>()?;
    Ok((testset, systems))
}
