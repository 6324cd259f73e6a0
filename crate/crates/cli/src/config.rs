//! Run configuration: a TOML file, overridden field by field by flags.
//!
//! ```toml
//! output_dir = "out"
//! human_scores = "human.tsv"
//! w = 6
//! s = 6
//! w_max = 10
//! partial_policy = "DROP"
//! weighting = "uniform"
//!
//! [scorer]
//! kind = "lexical_overlap"
//!
//! [[corpus]]
//! lang_pair = "en-de"
//! source = "en-de/source.txt"
//! docids = "en-de/docids.txt"
//! systems = { sysA = "en-de/sysA.txt", sysB = "en-de/sysB.txt" }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use slide_core::aggregation::Weighting;
use slide_core::exec::Execution;
use slide_core::metaeval::{DocLength, SyntheticParams};
use slide_core::scoring::{ScorerKind, ScorerSpec};
use slide_core::windowing::PartialPolicy;

use crate::cli::Options;
use crate::failure::{usage, Failure};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub human_scores: Option<PathBuf>,
    pub w: Option<usize>,
    pub s: Option<usize>,
    pub w_max: Option<usize>,
    pub partial_policy: Option<String>,
    pub weighting: Option<String>,
    pub max_tokens: Option<usize>,
    pub tokenizer: Option<String>,
    pub limit: Option<usize>,
    pub scorer: Option<ScorerTable>,
    #[serde(default)]
    pub corpus: Vec<CorpusEntry>,
    pub synth: Option<SynthTable>,
}

#[derive(Debug, Deserialize)]
pub struct ScorerTable {
    pub kind: String,
    #[serde(flatten)]
    pub parameters: BTreeMap<String, toml::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub lang_pair: String,
    pub source: Option<PathBuf>,
    pub docids: Option<PathBuf>,
    #[serde(default)]
    pub systems: BTreeMap<String, PathBuf>,
    pub jsonl: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthTable {
    pub n_docs: Option<usize>,
    pub doc_len: Option<DocLenValue>,
    pub ambiguity_rate: Option<f64>,
    pub lang_pair: Option<String>,
    /// System name to error rate.
    pub systems: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DocLenValue {
    Fixed(usize),
    Range([usize; 2]),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.output_dir.as_mut().map(fix);
        self.human_scores.as_mut().map(fix);
        if let Some(t) = self.tokenizer.as_mut() {
            if let Some(dir) = t.strip_prefix("sidecar:") {
                let mut p = PathBuf::from(dir);
                fix(&mut p);
                *t = format!("sidecar:{}", p.display());
            }
        }
        for c in &mut self.corpus {
            c.source.as_mut().map(fix);
            c.docids.as_mut().map(fix);
            c.jsonl.as_mut().map(fix);
            c.systems.values_mut().for_each(fix);
        }
    }
}

#[derive(Debug, Clone)]
pub enum CorpusSpec {
    Plain {
        lang_pair: String,
        source: PathBuf,
        docids: PathBuf,
        systems: Vec<(String, PathBuf)>,
    },
    Jsonl {
        lang_pair: String,
        path: PathBuf,
    },
}

impl CorpusSpec {
    pub fn lang_pair(&self) -> &str {
        match self {
            CorpusSpec::Plain { lang_pair, .. } | CorpusSpec::Jsonl { lang_pair, .. } => lang_pair,
        }
    }

    fn paths(&self) -> Vec<&Path> {
        match self {
            CorpusSpec::Plain {
                source,
                docids,
                systems,
                ..
            } => {
                let mut v = vec![source.as_path(), docids.as_path()];
                v.extend(systems.iter().map(|(_, p)| p.as_path()));
                v
            }
            CorpusSpec::Jsonl { path, .. } => vec![path.as_path()],
        }
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug)]
pub struct Settings {
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
    pub exec: Execution,
    pub human_scores: Option<PathBuf>,
    pub corpora: Vec<CorpusSpec>,
    pub scorer: Option<ScorerSpec>,
    pub window: Option<usize>,
    pub stride: Option<usize>,
    pub w_max: usize,
    pub partial_policy: PartialPolicy,
    pub weighting: Weighting,
    pub max_tokens: Option<usize>,
    pub tokenizer: String,
    pub limit: usize,
    pub synth: SyntheticParams,
    pub dump_chunks: bool,
}

pub const DEFAULT_OUTPUT_DIR: &str = "slide-out";
pub const DEFAULT_W_MAX: usize = 10;
pub const DEFAULT_LIMIT: usize = 512;

fn key_value(s: &str, what: &str) -> Result<(String, String), Failure> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| usage(format!("{what} must look like KEY=VALUE, got `{s}`")))
}

fn toml_to_param(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_doc_len(s: &str) -> Result<DocLength, Failure> {
    let bad = || usage(format!("--doc-len expects N or MIN:MAX, got `{s}`"));
    match s.split_once(':') {
        Some((a, b)) => Ok(DocLength::Uniform {
            min: a.trim().parse().map_err(|_| bad())?,
            max: b.trim().parse().map_err(|_| bad())?,
        }),
        None => Ok(DocLength::Fixed(s.trim().parse().map_err(|_| bad())?)),
    }
}

impl Settings {
    pub fn resolve(opts: &Options) -> Result<Settings, Failure> {
        let cfg = match &opts.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };

        let corpora = if opts.source.is_some() || opts.jsonl.is_some() || !opts.system.is_empty() {
            vec![corpus_from_flags(opts)?]
        } else {
            cfg.corpus
                .iter()
                .map(corpus_from_entry)
                .collect::<Result<Vec<_>, _>>()?
        };
        let mut seen = std::collections::BTreeSet::new();
        for c in &corpora {
            if !seen.insert(c.lang_pair()) {
                return Err(usage(format!(
                    "language pair `{}` is configured twice",
                    c.lang_pair()
                )));
            }
        }

        let scorer = match (&opts.scorer, &cfg.scorer) {
            (Some(kind), _) => Some(ScorerSpec::new(parse_kind(kind)?)),
            (None, Some(t)) => {
                let mut spec = ScorerSpec::new(parse_kind(&t.kind)?);
                for (k, v) in &t.parameters {
                    spec = spec.with(k, toml_to_param(v));
                }
                Some(spec)
            }
            (None, None) => None,
        };
        let scorer = match scorer {
            Some(mut spec) => {
                for kv in &opts.scorer_param {
                    let (k, v) = key_value(kv, "--scorer-param")?;
                    spec = spec.with(&k, v);
                }
                Some(spec)
            }
            None if !opts.scorer_param.is_empty() => {
                return Err(usage("--scorer-param given without a scorer kind"));
            }
            None => None,
        };

        let partial_policy = match opts.partial_policy.as_deref().or(cfg.partial_policy.as_deref()) {
            Some(p) => p.parse().map_err(|e: slide_core::SlideError| usage(e.to_string()))?,
            None => PartialPolicy::Drop,
        };
        let weighting = match opts.weighting.as_deref().or(cfg.weighting.as_deref()) {
            Some(p) => p.parse().map_err(|e: slide_core::SlideError| usage(e.to_string()))?,
            None => Weighting::Uniform,
        };

        let synth = synth_params(opts, cfg.synth.as_ref(), opts.seed.or(cfg.seed).unwrap_or(0))?;

        Ok(Settings {
            output_dir: opts
                .output_dir
                .clone()
                .or(cfg.output_dir)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            threads: opts.threads.or(cfg.threads),
            exec: if opts.sequential {
                Execution::Sequential
            } else {
                Execution::default()
            },
            human_scores: opts.human_scores.clone().or(cfg.human_scores),
            corpora,
            scorer,
            window: opts.window.or(cfg.w),
            stride: opts.stride.or(cfg.s),
            w_max: opts.w_max.or(cfg.w_max).unwrap_or(DEFAULT_W_MAX),
            partial_policy,
            weighting,
            max_tokens: opts.max_tokens.or(cfg.max_tokens),
            tokenizer: opts
                .tokenizer
                .clone()
                .or(cfg.tokenizer)
                .unwrap_or_else(|| "whitespace".into()),
            limit: opts.limit.or(cfg.limit).unwrap_or(DEFAULT_LIMIT),
            synth,
            dump_chunks: opts.dump_chunks,
        })
    }

    /// Every input path the run would read must exist.
    pub fn check_paths(&self, with_human: bool) -> Result<(), Failure> {
        let mut paths: Vec<&Path> = self.corpora.iter().flat_map(CorpusSpec::paths).collect();
        if with_human {
            if let Some(h) = &self.human_scores {
                paths.push(h);
            }
        }
        if let Some(dir) = self.tokenizer.strip_prefix("sidecar:") {
            paths.push(Path::new(dir));
        }
        for p in paths {
            if !p.exists() {
                return Err(usage(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn require_corpora(&self) -> Result<(), Failure> {
        if self.corpora.is_empty() {
            return Err(usage(
                "no corpus configured (use [[corpus]] in the config, or --source/--docids/--system or --jsonl)",
            ));
        }
        Ok(())
    }

    /// `(w, s)` for a single-configuration run; `s` defaults to `w`.
    pub fn window_stride(&self) -> Result<(usize, usize), Failure> {
        let w = self
            .window
            .ok_or_else(|| usage("a window size is required (--window or `w` in the config)"))?;
        let s = self.stride.unwrap_or(w);
        if w == 0 || s == 0 || s > w {
            return Err(usage(format!("need 1 <= s <= w, got w={w} s={s}")));
        }
        Ok((w, s))
    }
}

fn parse_kind(s: &str) -> Result<ScorerKind, Failure> {
    s.parse().map_err(|e: slide_core::SlideError| usage(e.to_string()))
}

fn corpus_from_entry(c: &CorpusEntry) -> Result<CorpusSpec, Failure> {
    match (&c.jsonl, &c.source, &c.docids) {
        (Some(path), None, None) if c.systems.is_empty() => Ok(CorpusSpec::Jsonl {
            lang_pair: c.lang_pair.clone(),
            path: path.clone(),
        }),
        (None, Some(source), Some(docids)) => {
            if c.systems.is_empty() {
                return Err(usage(format!("corpus `{}` lists no systems", c.lang_pair)));
            }
            Ok(CorpusSpec::Plain {
                lang_pair: c.lang_pair.clone(),
                source: source.clone(),
                docids: docids.clone(),
                systems: c.systems.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            })
        }
        _ => Err(usage(format!(
            "corpus `{}` needs either `jsonl` alone or `source`, `docids` and `systems`",
            c.lang_pair
        ))),
    }
}

fn corpus_from_flags(opts: &Options) -> Result<CorpusSpec, Failure> {
    let lang_pair = opts
        .lang_pair
        .clone()
        .ok_or_else(|| usage("--lang-pair is required with --source/--jsonl"))?;
    if let Some(path) = &opts.jsonl {
        if opts.source.is_some() || opts.docids.is_some() || !opts.system.is_empty() {
            return Err(usage("--jsonl cannot be combined with --source/--docids/--system"));
        }
        return Ok(CorpusSpec::Jsonl {
            lang_pair,
            path: path.clone(),
        });
    }
    let (Some(source), Some(docids)) = (&opts.source, &opts.docids) else {
        return Err(usage("--source and --docids are both required"));
    };
    if opts.system.is_empty() {
        return Err(usage("at least one --system NAME=PATH is required"));
    }
    let systems = opts
        .system
        .iter()
        .map(|kv| key_value(kv, "--system").map(|(k, v)| (k, PathBuf::from(v))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CorpusSpec::Plain {
        lang_pair,
        source: source.clone(),
        docids: docids.clone(),
        systems,
    })
}

fn synth_params(opts: &Options, table: Option<&SynthTable>, seed: u64) -> Result<SyntheticParams, Failure> {
    let mut p = SyntheticParams {
        seed,
        ..Default::default()
    };
    if let Some(t) = table {
        if let Some(n) = t.n_docs {
            p.n_docs = n;
        }
        match t.doc_len {
            Some(DocLenValue::Fixed(n)) => p.doc_len = DocLength::Fixed(n),
            Some(DocLenValue::Range([min, max])) => p.doc_len = DocLength::Uniform { min, max },
            None => {}
        }
        if let Some(r) = t.ambiguity_rate {
            p.ambiguity_rate = r;
        }
        if let Some(lp) = &t.lang_pair {
            p.lang_pair = lp.clone();
        }
        if let Some(systems) = &t.systems {
            p.error_rates = systems.iter().map(|(k, v)| (k.clone(), *v)).collect();
        }
    }
    if let Some(n) = opts.n_docs {
        p.n_docs = n;
    }
    if let Some(d) = &opts.doc_len {
        p.doc_len = parse_doc_len(d)?;
    }
    if let Some(r) = opts.ambiguity_rate {
        p.ambiguity_rate = r;
    }
    if let Some(lp) = &opts.lang_pair {
        p.lang_pair = lp.clone();
    }
    if !opts.error_rate.is_empty() {
        p.error_rates = opts
            .error_rate
            .iter()
            .map(|kv| {
                let (k, v) = key_value(kv, "--error-rate")?;
                let r = v
                    .parse::<f64>()
                    .map_err(|_| usage(format!("bad error rate `{v}` for `{k}`")))?;
                Ok((k, r))
            })
            .collect::<Result<_, Failure>>()?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doc_len_forms() {
        assert_eq!(parse_doc_len("7").unwrap(), DocLength::Fixed(7));
        assert_eq!(parse_doc_len("2:12").unwrap(), DocLength::Uniform { min: 2, max: 12 });
        assert!(parse_doc_len("2-12").is_err());
    }

    #[test]
    fn config_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            r#"
human_scores = "h.tsv"
tokenizer = "sidecar:tok"

[scorer]
kind = "constant"
value = 0.5

[[corpus]]
lang_pair = "en-de"
source = "src.txt"
docids = "/abs/docids.txt"
systems = { a = "a.txt" }
"#,
        )
        .unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.human_scores.unwrap(), dir.path().join("h.tsv"));
        assert_eq!(cfg.corpus[0].source.as_ref().unwrap(), &dir.path().join("src.txt"));
        assert_eq!(cfg.corpus[0].docids.as_ref().unwrap(), Path::new("/abs/docids.txt"));
        assert_eq!(
            cfg.tokenizer.unwrap(),
            format!("sidecar:{}", dir.path().join("tok").display())
        );
        let scorer = cfg.scorer.unwrap();
        assert_eq!(toml_to_param(&scorer.parameters["value"]), "0.5");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "window = 3\n").unwrap();
        assert!(RunConfig::load(&path).is_err());
    }
}
