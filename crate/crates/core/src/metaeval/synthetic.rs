//! Seeded synthetic corpora with cross-sentence ambiguity.
//!
//! Some sentences refer back (one or two sentences earlier) to an entity
//! introduced as `ENT<id>=<class>`. The source side carries only `IT<id>`,
//! while each system realizes the reference as `PRO<id>=<class>`, choosing
//! the wrong class with its error rate. All other text is identical across
//! systems, so errors are only visible to a scorer that sees the antecedent
//! in the same chunk. Human scores are `1 - error_rate`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{HumanScores, JudgmentStyle, Sentence, SystemOutput, TestSet};
use crate::error::{Result, SlideError};
use crate::scoring::mock::{ANTECEDENT_PREFIX, MARKER_PREFIX, SOURCE_MARKER_PREFIX};

const CLASSES: [&str; 3] = ["m", "f", "n"];

const SRC_WORDS: [&str; 12] = [
    "the", "house", "river", "was", "near", "old", "light", "we", "saw", "green", "road", "today",
];
const TGT_WORDS: [&str; 12] = [
    "das", "haus", "fluss", "war", "nahe", "alt", "licht", "wir", "sahen", "gruen", "strasse",
    "heute",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocLength {
    Fixed(usize),
    /// Inclusive range.
    Uniform { min: usize, max: usize },
}

impl DocLength {
    fn sample(&self, rng: &mut impl Rng) -> usize {
        match *self {
            DocLength::Fixed(n) => n,
            DocLength::Uniform { min, max } => rng.gen_range(min..=max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub n_docs: usize,
    pub doc_len: DocLength,
    /// Probability that a sentence (other than the first of a document)
    /// refers back to an earlier entity.
    pub ambiguity_rate: f64,
    /// `(system name, error rate)`, in output order.
    pub error_rates: Vec<(String, f64)>,
    pub seed: u64,
    pub lang_pair: String,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            n_docs: 1000,
            doc_len: DocLength::Uniform { min: 2, max: 12 },
            ambiguity_rate: 0.3,
            error_rates: vec![
                ("sysA".into(), 0.05),
                ("sysB".into(), 0.15),
                ("sysC".into(), 0.30),
            ],
            seed: 0,
            lang_pair: "src-tgt".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub testset: TestSet,
    pub systems: Vec<SystemOutput>,
    pub human: HumanScores,
}

struct Reference {
    sentence: usize,
    entity: u64,
    class: usize,
}

fn validate(p: &SyntheticParams) -> Result<()> {
    let bad = |m: String| Err(SlideError::Config(m));
    if p.n_docs == 0 {
        return bad("n_docs must be >= 1".into());
    }
    if p.error_rates.len() < 2 {
        return bad("need at least 2 systems".into());
    }
    if !(0.0..=1.0).contains(&p.ambiguity_rate) {
        return bad(format!("ambiguity_rate {} outside [0,1]", p.ambiguity_rate));
    }
    for (name, r) in &p.error_rates {
        if !(0.0..=1.0).contains(r) {
            return bad(format!("error rate {r} for `{name}` outside [0,1]"));
        }
    }
    let mut names: Vec<&String> = p.error_rates.iter().map(|(n, _)| n).collect();
    names.sort();
    names.dedup();
    if names.len() != p.error_rates.len() {
        return bad("system names must be distinct".into());
    }
    match p.doc_len {
        DocLength::Fixed(0) => bad("document length must be >= 1".into()),
        DocLength::Uniform { min, max } if min == 0 || min > max => {
            bad(format!("bad document length range {min}..={max}"))
        }
        _ => Ok(()),
    }
}

fn filler(rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = rng.gen_range(3..=7);
    (0..n).map(|_| rng.gen_range(0..SRC_WORDS.len())).collect()
}

pub fn generate_synthetic_corpus(params: &SyntheticParams) -> Result<SyntheticCorpus> {
    validate(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // structure shared by all systems
    let mut docs = Vec::with_capacity(params.n_docs);
    let mut src_words: Vec<Vec<usize>> = Vec::new();
    let mut entities: Vec<Vec<(u64, usize)>> = Vec::new(); // per sentence
    let mut refs: Vec<Reference> = Vec::new();
    let mut next_entity = 0u64;
    for k in 0..params.n_docs {
        let len = params.doc_len.sample(&mut rng);
        let base = src_words.len();
        for j in 0..len {
            src_words.push(filler(&mut rng));
            entities.push(Vec::new());
            if j > 0 && rng.gen_bool(params.ambiguity_rate) {
                let back = rng.gen_range(1..=2).min(j);
                let class = rng.gen_range(0..CLASSES.len());
                entities[base + j - back].push((next_entity, class));
                refs.push(Reference {
                    sentence: base + j,
                    entity: next_entity,
                    class,
                });
                next_entity += 1;
            }
        }
        docs.push((format!("doc{k:05}"), base..base + len));
    }

    let mut src_text: Vec<String> = Vec::with_capacity(src_words.len());
    let mut hyp_base: Vec<String> = Vec::with_capacity(src_words.len());
    for (words, ents) in src_words.iter().zip(&entities) {
        let mut s: Vec<String> = words.iter().map(|&w| SRC_WORDS[w].to_owned()).collect();
        let mut h: Vec<String> = words.iter().map(|&w| TGT_WORDS[w].to_owned()).collect();
        for &(id, class) in ents {
            let tag = format!("{ANTECEDENT_PREFIX}{id}={}", CLASSES[class]);
            s.push(tag.clone());
            h.push(tag);
        }
        src_text.push(s.join(" "));
        hyp_base.push(h.join(" "));
    }
    for r in &refs {
        src_text[r.sentence].push_str(&format!(" {SOURCE_MARKER_PREFIX}{}", r.entity));
    }

    let testset = TestSet::from_documents(
        params.lang_pair.clone(),
        docs.iter().map(|(id, range)| {
            (
                id.clone(),
                src_text[range.clone()]
                    .iter()
                    .map(|t| Sentence::new(t.clone()).expect("no newlines"))
                    .collect(),
            )
        }),
    )?;

    let mut systems = Vec::with_capacity(params.error_rates.len());
    for (i, (name, error_rate)) in params.error_rates.iter().enumerate() {
        let mut sys_rng = ChaCha8Rng::seed_from_u64(params.seed);
        sys_rng.set_stream(i as u64 + 1);
        let mut hyp = hyp_base.clone();
        for r in &refs {
            let class = if sys_rng.gen_bool(*error_rate) {
                let wrong: Vec<usize> = (0..CLASSES.len()).filter(|&c| c != r.class).collect();
                *wrong.choose(&mut sys_rng).expect("at least one other class")
            } else {
                r.class
            };
            hyp[r.sentence].push_str(&format!(" {MARKER_PREFIX}{}={}", r.entity, CLASSES[class]));
        }
        let hyp = hyp
            .into_iter()
            .map(|t| Sentence::new(t).expect("no newlines"))
            .collect();
        systems.push(SystemOutput::new(name.clone(), &testset, hyp)?);
    }

    let human = HumanScores {
        lang_pair: params.lang_pair.clone(),
        scores: params
            .error_rates
            .iter()
            .map(|(n, r)| (n.clone(), 1.0 - r))
            .collect::<BTreeMap<_, _>>(),
        judgment_style: JudgmentStyle::Other,
    };
    Ok(SyntheticCorpus {
        testset,
        systems,
        human,
    })
}
