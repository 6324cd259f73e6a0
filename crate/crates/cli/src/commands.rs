use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use slide_core::aggregation::{score_system_detailed, write_score_dump, SystemScore};
use slide_core::corpus::{
    load_human_scores, load_jsonl, load_system_output, load_testset, write_human_scores,
    HumanScores, SystemOutput,
};
use slide_core::exec;
use slide_core::metaeval::export::{
    dropped_tsv, grid_heatmap_svg, grid_heatmap_text, grid_scores_tsv, grid_tsv,
    overlength_table, overlength_tsv,
};
use slide_core::metaeval::{
    corpus_stats, generate_synthetic_corpus, run_grid, GridOptions, LangPairData,
    TokenizerChoice,
};
use slide_core::scoring::{ExternalOptions, Scorer, ScorerKind, ScorerSpec};
use slide_core::tokenize::{tokenizer_by_id, SidecarTokenizer, Tokenizer};
use slide_core::windowing::{Chunking, TokenWindowConfig, WindowConfig};

use crate::config::{CorpusSpec, Settings};
use crate::failure::{output, usage, Failure};

type CmdResult = Result<(), Failure>;

fn write_file(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| output(path, e))
}

fn ensure_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| output(dir, e))
}

fn load_corpus(spec: &CorpusSpec) -> Result<LangPairData, Failure> {
    let (testset, systems) = match spec {
        CorpusSpec::Plain {
            lang_pair,
            source,
            docids,
            systems,
        } => {
            let ts = load_testset(source, docids, lang_pair)?;
            let outs = systems
                .iter()
                .map(|(name, path)| load_system_output(path, &ts, name))
                .collect::<Result<Vec<_>, _>>()?;
            (ts, outs)
        }
        CorpusSpec::Jsonl { lang_pair, path } => load_jsonl(path, lang_pair)?,
    };
    Ok(LangPairData::new(testset, systems)?)
}

fn load_corpora(settings: &Settings) -> Result<Vec<LangPairData>, Failure> {
    settings.require_corpora()?;
    settings.corpora.iter().map(load_corpus).collect()
}

fn threads_for(settings: &Settings, spec: &ScorerSpec) -> Result<usize, Failure> {
    if let Some(n) = settings.threads {
        if n == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        return Ok(n);
    }
    if spec.kind == ScorerKind::External {
        return match spec.parameters.get("window") {
            Some(w) => w
                .parse()
                .map_err(|_| usage(format!("scorer window `{w}` is not a count"))),
            None => Ok(ExternalOptions::default().window),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn scorer_spec(settings: &Settings) -> Result<&ScorerSpec, Failure> {
    let spec = settings
        .scorer
        .as_ref()
        .ok_or_else(|| usage("no scorer configured (--scorer or [scorer] in the config)"))?;
    spec.validate()?;
    Ok(spec)
}

fn build_scorer(settings: &Settings) -> Result<Box<dyn Scorer>, Failure> {
    let spec = scorer_spec(settings)?;
    exec::configure_threads(threads_for(settings, spec)?);
    Ok(spec.build(settings.exec)?)
}

fn tokenizer_for(settings: &Settings, system: &str) -> Result<Box<dyn Tokenizer>, Failure> {
    match settings.tokenizer.strip_prefix("sidecar:") {
        Some(dir) => {
            let path = Path::new(dir).join(format!("{system}.tsv"));
            if !path.exists() {
                return Err(usage(format!("no token sidecar for `{system}` at {}", path.display())));
            }
            Ok(Box::new(SidecarTokenizer::load(&path)?))
        }
        None => Ok(tokenizer_by_id(&settings.tokenizer)?),
    }
}

fn tokenizer_choice(settings: &Settings, data: &[LangPairData]) -> Result<TokenizerChoice, Failure> {
    if settings.tokenizer.starts_with("sidecar:") {
        let mut map = BTreeMap::new();
        for sys in data.iter().flat_map(|d| &d.systems) {
            if !map.contains_key(&sys.system_name) {
                map.insert(sys.system_name.clone(), tokenizer_for(settings, &sys.system_name)?);
            }
        }
        Ok(TokenizerChoice::PerSystem(map))
    } else {
        Ok(TokenizerChoice::Shared(tokenizer_by_id(&settings.tokenizer)?))
    }
}

/// Human scores for every configured language pair, each with at least two
/// scored systems that all have outputs.
fn load_human(settings: &Settings, data: &[LangPairData]) -> Result<Vec<HumanScores>, Failure> {
    let path = settings
        .human_scores
        .as_ref()
        .ok_or_else(|| usage("grid needs human scores (--human-scores or `human_scores`)"))?;
    if !path.exists() {
        return Err(usage(format!("{} does not exist", path.display())));
    }
    let all = load_human_scores(path)?;
    let mut out = Vec::with_capacity(data.len());
    for lp in data {
        let name = &lp.testset.lang_pair;
        let hs = all
            .iter()
            .find(|h| &h.lang_pair == name)
            .ok_or_else(|| usage(format!("no human scores for `{name}` in {}", path.display())))?;
        if hs.scores.len() < 2 {
            return Err(usage(format!(
                "`{name}` has {} human-scored system(s); pairwise accuracy needs at least 2",
                hs.scores.len()
            )));
        }
        hs.check_systems(&lp.systems).map_err(|e| usage(e.to_string()))?;
        out.push(hs.clone());
    }
    for h in &all {
        if !data.iter().any(|d| d.testset.lang_pair == h.lang_pair) {
            eprintln!("slide: note: ignoring human scores for unconfigured `{}`", h.lang_pair);
        }
    }
    Ok(out)
}

fn chunking_for(settings: &Settings, tok: Option<&dyn Tokenizer>) -> Result<Chunking, Failure> {
    match settings.max_tokens {
        Some(max) => {
            let tok = tok.expect("tokenizer resolved for token-budget chunking");
            let stride = settings.stride.unwrap_or(1);
            Ok(TokenWindowConfig::new(max, stride, tok.id())?.into())
        }
        None => {
            let (w, s) = settings.window_stride()?;
            Ok(WindowConfig::new(w, s, settings.partial_policy)?.into())
        }
    }
}

fn safe_file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

pub fn score(settings: &Settings) -> CmdResult {
    if settings.max_tokens.is_none() {
        settings.window_stride()?;
    }
    settings.check_paths(false)?;
    let data = load_corpora(settings)?;
    let scorer = build_scorer(settings)?;
    ensure_dir(&settings.output_dir)?;
    if settings.dump_chunks {
        ensure_dir(&settings.output_dir.join("chunks"))?;
    }

    let mut rows: Vec<(SystemScore, usize)> = Vec::new();
    for lp in &data {
        for sys in &lp.systems {
            let tok = match settings.max_tokens {
                Some(_) => Some(tokenizer_for(settings, &sys.system_name)?),
                None => None,
            };
            let chunking = chunking_for(settings, tok.as_deref())?;
            let scored = score_system_detailed(
                &lp.testset,
                sys,
                &chunking,
                scorer.as_ref(),
                settings.weighting,
                tok.as_deref(),
            )?;
            if settings.dump_chunks {
                let name = format!(
                    "{}.{}.tsv",
                    safe_file_stem(&lp.testset.lang_pair),
                    safe_file_stem(&sys.system_name)
                );
                write_score_dump(&settings.output_dir.join("chunks").join(name), &scored)?;
            }
            rows.push((scored.score, lp.testset.total_sentences));
        }
    }

    let mut tsv = String::from(
        "lang_pair\tsystem\tconfig\tvalue\tn_chunks\tn_sentences_covered\tn_sentences\tcoverage\n",
    );
    let mut table = format!(
        "{:<12} {:<20} {:>8} {:>9} {:>9}\n",
        "lang_pair", "system", "value", "n_chunks", "coverage"
    );
    for (sc, total) in &rows {
        let coverage = sc.n_sentences_covered as f64 / *total as f64;
        let _ = writeln!(
            tsv,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            sc.lang_pair, sc.system_name, sc.config_label, sc.value, sc.n_chunks,
            sc.n_sentences_covered, total, coverage
        );
        let _ = writeln!(
            table,
            "{:<12} {:<20} {:>8.4} {:>9} {:>9.4}",
            sc.lang_pair, sc.system_name, sc.value, sc.n_chunks, coverage
        );
    }
    let label = rows.first().map(|(s, _)| s.config_label.clone()).unwrap_or_default();
    let path = settings.output_dir.join("scores.tsv");
    write_file(&path, &tsv)?;
    println!("config: {label}");
    print!("{table}");
    println!("wrote {}", path.display());
    Ok(())
}

pub fn grid(settings: &Settings) -> CmdResult {
    if settings.w_max == 0 {
        return Err(usage("w_max must be >= 1"));
    }
    settings.check_paths(false)?;
    let data = load_corpora(settings)?;
    let human = load_human(settings, &data)?;
    let scorer = build_scorer(settings)?;
    let opts = GridOptions {
        partial_policy: settings.partial_policy,
        weighting: settings.weighting,
        exec: settings.exec,
    };
    let grid = run_grid(&data, &human, scorer.as_ref(), settings.w_max, opts)?;

    ensure_dir(&settings.output_dir)?;
    let title = format!(
        "pairwise accuracy, {} / {} / {}",
        scorer.name(),
        settings.partial_policy,
        settings.weighting
    );
    let heatmap = grid_heatmap_text(&grid);
    let files = [
        ("grid.tsv", grid_tsv(&grid)),
        ("grid_scores.tsv", grid_scores_tsv(&grid)),
        ("heatmap.txt", heatmap.clone()),
        ("heatmap.svg", grid_heatmap_svg(&grid, &title)),
    ];
    for (name, contents) in &files {
        write_file(&settings.output_dir.join(name), contents)?;
    }

    let fmt = |cell: Option<((usize, usize), f64)>| match cell {
        Some(((w, s), a)) => format!("w={w} s={s} accuracy {a:.4}"),
        None => "n/a".to_owned(),
    };
    let pairs = grid.cells.values().next().map_or(0, |r| r.pooled.n_pairs);
    println!("{title} ({pairs} system pairs)");
    print!("{heatmap}");
    println!("best:  {}", fmt(grid.best()));
    println!("worst: {}", fmt(grid.worst()));
    let baseline = grid.cells.get(&(1, 1)).and_then(|r| r.accuracy());
    println!(
        "sentence-level baseline: w=1 s=1 accuracy {}",
        baseline.map_or_else(|| "n/a".to_owned(), |a| format!("{a:.4}"))
    );
    println!("wrote {}", settings.output_dir.display());
    Ok(())
}

pub fn stats(settings: &Settings) -> CmdResult {
    if settings.w_max == 0 {
        return Err(usage("w_max must be >= 1"));
    }
    settings.check_paths(false)?;
    let data = load_corpora(settings)?;
    let tokenizers = tokenizer_choice(settings, &data)?;
    let all = data
        .iter()
        .map(|lp| {
            corpus_stats(
                &lp.testset,
                &lp.systems,
                settings.w_max,
                &tokenizers,
                settings.limit,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    ensure_dir(&settings.output_dir)?;
    let table = overlength_table(&all);
    write_file(&settings.output_dir.join("dropped.tsv"), &dropped_tsv(&all))?;
    write_file(&settings.output_dir.join("overlength.tsv"), &overlength_tsv(&all))?;
    write_file(&settings.output_dir.join("overlength.txt"), &table)?;

    println!("dropped sentences (DROP, s = w), percent:");
    let mut header = format!("{:>3}", "w");
    for st in &all {
        let _ = write!(header, " {:>10}", st.lang_pair);
    }
    println!("{header}");
    for w in 1..=settings.w_max {
        let mut row = format!("{w:>3}");
        for st in &all {
            let _ = write!(row, " {:>10.4}", 100.0 * st.dropped[&(w, w)].fraction());
        }
        println!("{row}");
    }
    println!(
        "chunks over {} tokens ({}), percent:",
        settings.limit, settings.tokenizer
    );
    print!("{table}");
    println!("wrote {}", settings.output_dir.display());
    Ok(())
}

fn check_system_name(name: &str) -> CmdResult {
    if name.is_empty() || safe_file_stem(name) != name {
        return Err(usage(format!(
            "system name `{name}` must use only letters, digits, `-`, `_` and `.`"
        )));
    }
    Ok(())
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

pub fn synth(settings: &Settings) -> CmdResult {
    let params = &settings.synth;
    for (name, _) in &params.error_rates {
        check_system_name(name)?;
    }
    let corpus = generate_synthetic_corpus(params)?;
    let dir = &settings.output_dir;
    ensure_dir(dir)?;

    let source = dir.join("source.txt");
    let docids = dir.join("docids.txt");
    corpus.testset.write(&source, &docids)?;
    let mut system_paths: Vec<(String, PathBuf)> = Vec::new();
    for sys in &corpus.systems {
        let path = dir.join(format!("{}.txt", sys.system_name));
        sys.write(&path)?;
        system_paths.push((sys.system_name.clone(), path));
    }
    write_human_scores(&dir.join("human.tsv"), std::slice::from_ref(&corpus.human))?;

    // ready-to-run configuration next to the files
    let mut cfg = String::new();
    let _ = writeln!(cfg, "output_dir = \"results\"");
    let _ = writeln!(cfg, "human_scores = \"human.tsv\"");
    let _ = writeln!(cfg, "seed = {}", params.seed);
    let _ = writeln!(cfg, "w_max = 6");
    let _ = writeln!(cfg, "\n[scorer]\nkind = \"context_aware_mock\"");
    let _ = writeln!(cfg, "\n[[corpus]]");
    let _ = writeln!(cfg, "lang_pair = {}", toml_string(&params.lang_pair));
    let _ = writeln!(cfg, "source = \"source.txt\"\ndocids = \"docids.txt\"");
    let _ = writeln!(cfg, "\n[corpus.systems]");
    for (name, _) in &system_paths {
        let _ = writeln!(cfg, "{} = {}", toml_string(name), toml_string(&format!("{name}.txt")));
    }
    write_file(&dir.join("config.toml"), &cfg)?;

    println!(
        "{} documents, {} sentences, {} systems (seed {})",
        corpus.testset.documents.len(),
        corpus.testset.total_sentences,
        corpus.systems.len(),
        params.seed
    );
    for (name, rate) in &params.error_rates {
        println!("  {name:<12} error rate {rate:.4}  human {:.4}", corpus.human.scores[name]);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn validate(settings: &Settings) -> CmdResult {
    settings.require_corpora()?;
    settings.check_paths(true)?;
    if settings.window.is_some() || settings.stride.is_some() {
        settings.window_stride()?;
    }
    if let Some(spec) = &settings.scorer {
        spec.validate()?;
    }
    if !settings.tokenizer.starts_with("sidecar:") {
        tokenizer_by_id(&settings.tokenizer)?;
    }
    let data = load_corpora(settings)?;
    if let Some(dir) = settings.tokenizer.strip_prefix("sidecar:") {
        for sys in data.iter().flat_map(|d| &d.systems) {
            let path = Path::new(dir).join(format!("{}.tsv", sys.system_name));
            if !path.exists() {
                return Err(usage(format!("no token sidecar at {}", path.display())));
            }
        }
    }
    for lp in &data {
        println!(
            "{}: {} documents, {} sentences, systems: {}",
            lp.testset.lang_pair,
            lp.testset.documents.len(),
            lp.testset.total_sentences,
            system_names(&lp.systems)
        );
    }
    if settings.human_scores.is_some() {
        let human = load_human(settings, &data)?;
        let pairs: usize = human.iter().map(|h| h.scores.len() * (h.scores.len() - 1) / 2).sum();
        println!("human scores: {} language pair(s), {pairs} system pairs", human.len());
    }
    match &settings.scorer {
        Some(spec) => println!("scorer: {} (not started)", spec.kind),
        None => println!("scorer: none configured"),
    }
    println!("configuration ok");
    Ok(())
}

fn system_names(systems: &[SystemOutput]) -> String {
    systems
        .iter()
        .map(|s| s.system_name.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}
