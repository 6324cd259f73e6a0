use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use slide_core::scoring::lexical_overlap;

const SLIDE: &str = env!("CARGO_BIN_EXE_slide");
const STUB: &str = env!("CARGO_BIN_EXE_slide-stub-scorer");

fn slide(args: &[&str]) -> Output {
    Command::new(SLIDE)
        .args(args)
        .env_remove("SLIDE_SCORER_ENDPOINT")
        .output()
        .expect("run slide")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(out: Output) -> Output {
    assert_eq!(code(&out), 0, "stdout:\n{}\nstderr:\n{}", stdout(&out), stderr(&out));
    out
}

fn write(path: &Path, contents: &str) -> PathBuf {
    fs::write(path, contents).unwrap();
    path.to_path_buf()
}

/// Rows of a TSV as header-keyed maps.
fn read_tsv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    lines
        .map(|l| {
            header
                .iter()
                .zip(l.split('\t'))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

struct Fixture {
    dir: tempfile::TempDir,
}

const SRC: [&str; 9] = [
    "the cat sat on the mat",
    "it was warm",
    "the dog slept",
    "nobody came",
    "rain fell all day",
    "we stayed in",
    "the end",
    "a new day",
    "sun at last",
];
const DOCIDS: [&str; 9] = ["d1", "d1", "d1", "d1", "d1", "d1", "d1", "d2", "d2"];
const HYP_A: [&str; 9] = [
    "the cat sat on a mat",
    "it was warm",
    "a dog slept",
    "nobody came",
    "rain fell all day long",
    "we stayed inside",
    "the end",
    "new day",
    "sun at last",
];
const HYP_B: [&str; 9] = [
    "cat mat",
    "warm",
    "the dog slept",
    "no one came",
    "rain",
    "we in",
    "end",
    "a new day",
    "sun",
];

impl Fixture {
    fn new() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let f = Fixture { dir };
        let lines = |v: &[&str]| v.join("\n") + "\n";
        write(&f.path("src.txt"), &lines(&SRC));
        write(&f.path("docids.txt"), &lines(&DOCIDS));
        write(&f.path("a.txt"), &lines(&HYP_A));
        write(&f.path("b.txt"), &lines(&HYP_B));
        write(
            &f.path("human.tsv"),
            "lang_pair\tsystem\tscore\nen-de\tA\t0.9\nen-de\tB\t0.4\n",
        );
        write(
            &f.path("run.toml"),
            r#"
output_dir = "out"
human_scores = "human.tsv"

[scorer]
kind = "lexical_overlap"

[[corpus]]
lang_pair = "en-de"
source = "src.txt"
docids = "docids.txt"
systems = { A = "a.txt", B = "b.txt" }
"#,
        );
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self) -> String {
        self.path("run.toml").display().to_string()
    }

    fn scores(&self) -> BTreeMap<String, f64> {
        read_tsv(&self.path("out/scores.tsv"))
            .into_iter()
            .map(|r| (r["system"].clone(), r["value"].parse().unwrap()))
            .collect()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn score_constant_half() {
    let f = Fixture::new();
    let out = ok(slide(&["score", "-c", &f.config(), "-w", "2", "-s", "2", "--scorer", "constant", "--scorer-param", "value=0.5"]));
    assert!(stdout(&out).contains("0.5000"));
    for (_, v) in f.scores() {
        assert_eq!(v, 0.5);
    }
    let rows = read_tsv(&f.path("out/scores.tsv"));
    assert_eq!(rows[0]["config"], "w2s2/DROP/uniform");
    // d1 has 7 sentences: 3 full windows; d2 has 2: 1 window
    assert_eq!(rows[0]["n_chunks"], "4");
    assert_eq!(rows[0]["n_sentences_covered"], "8");
}

#[test]
fn score_unit_window_is_the_sentence_mean() {
    let f = Fixture::new();
    ok(slide(&["score", "-c", &f.config(), "-w", "1"]));
    let got = f.scores();
    let direct = |hyp: &[&str]| {
        mean(&SRC.iter().zip(hyp).map(|(s, h)| lexical_overlap(s, h)).collect::<Vec<_>>())
    };
    for (name, hyp) in [("A", &HYP_A), ("B", &HYP_B)] {
        let want = direct(hyp);
        assert!((got[name] - want).abs() <= 1e-12 * want, "{name}: {} vs {want}", got[name]);
    }
}

#[test]
fn score_six_by_six_matches_hand_chunks() {
    let f = Fixture::new();
    ok(slide(&["score", "-c", &f.config(), "-w", "6", "-s", "6", "--weighting", "sentence_weighted"]));
    // Only d1 holds a full window of six: sentences 0..6. d2 is dropped.
    let src = SRC[..6].join(" ");
    let got = f.scores();
    for (name, hyp) in [("A", &HYP_A), ("B", &HYP_B)] {
        let want = lexical_overlap(&src, &hyp[..6].join(" "));
        assert_eq!(got[name], want, "{name}");
    }
    let rows = read_tsv(&f.path("out/scores.tsv"));
    assert_eq!(rows[0]["n_chunks"], "1");
    assert_eq!(rows[0]["coverage"], (6.0f64 / 9.0).to_string());
}

#[test]
fn score_include_policy_and_chunk_dump() {
    let f = Fixture::new();
    ok(slide(&["score", "-c", &f.config(), "-w", "3", "--partial-policy", "INCLUDE", "--dump-chunks"]));
    let dump = read_tsv(&f.path("out/chunks/en-de.A.tsv"));
    let spans: Vec<(String, String, String)> = dump
        .iter()
        .map(|r| (r["doc_id"].clone(), r["start"].clone(), r["n_sentences"].clone()))
        .collect();
    let s = |d: &str, a: &str, n: &str| (d.to_owned(), a.to_owned(), n.to_owned());
    assert_eq!(spans, vec![s("d1", "0", "3"), s("d1", "3", "3"), s("d1", "6", "1"), s("d2", "0", "2")]);
    assert_eq!(dump[2]["is_partial"], "true");
    let rows = read_tsv(&f.path("out/scores.tsv"));
    assert_eq!(rows[0]["coverage"], "1");
}

#[test]
fn score_with_token_budget() {
    let f = Fixture::new();
    ok(slide(&["score", "-c", &f.config(), "--max-tokens", "12", "-s", "2"]));
    let rows = read_tsv(&f.path("out/scores.tsv"));
    assert_eq!(rows[0]["config"], "t12s2/whitespace/uniform");
    assert!(rows.iter().all(|r| r["n_chunks"].parse::<usize>().unwrap() > 0));
}

#[test]
fn flags_alone_suffice() {
    let f = Fixture::new();
    let p = |n: &str| f.path(n).display().to_string();
    let out_dir = p("flags-out");
    ok(slide(&[
        "score", "--lang-pair", "en-de", "--source", &p("src.txt"), "--docids", &p("docids.txt"),
        "--system", &format!("A={}", p("a.txt")), "--scorer", "length_ratio", "-w", "2", "-o", &out_dir,
    ]));
    assert_eq!(read_tsv(&f.path("flags-out/scores.tsv")).len(), 1);
}

#[test]
fn jsonl_corpus() {
    let f = Fixture::new();
    let mut text = String::new();
    for i in 0..SRC.len() {
        let line = serde_json::json!({"doc_id": DOCIDS[i], "src": SRC[i], "hyp": {"A": HYP_A[i], "B": HYP_B[i]}});
        text.push_str(&line.to_string());
        text.push('\n');
    }
    let jsonl = write(&f.path("corpus.jsonl"), &text);
    ok(slide(&["score", "-c", &f.config(), "-w", "1"]));
    let plain = f.scores();
    ok(slide(&[
        "score", "--lang-pair", "en-de", "--jsonl", jsonl.to_str().unwrap(), "--scorer", "lexical_overlap",
        "-w", "1", "-o", f.path("out").to_str().unwrap(),
    ]));
    assert_eq!(f.scores(), plain);
}

#[test]
fn sequential_and_parallel_outputs_match() {
    let f = Fixture::new();
    ok(slide(&["grid", "-c", &f.config(), "--w-max", "4"]));
    let par = fs::read(f.path("out/grid_scores.tsv")).unwrap();
    ok(slide(&["grid", "-c", &f.config(), "--w-max", "4", "--sequential"]));
    assert_eq!(par, fs::read(f.path("out/grid_scores.tsv")).unwrap());
}

#[test]
fn grid_artifacts_and_summary() {
    let f = Fixture::new();
    let out = ok(slide(&["grid", "-c", &f.config(), "--w-max", "3"]));
    let text = stdout(&out);
    assert!(text.contains("best:"), "{text}");
    assert!(text.contains("worst:"), "{text}");
    assert!(text.contains("sentence-level baseline: w=1 s=1"), "{text}");
    let rows = read_tsv(&f.path("out/grid.tsv"));
    let pooled: Vec<_> = rows.iter().filter(|r| r["lang_pair"] == "POOLED").collect();
    assert_eq!(pooled.len(), 6);
    for name in ["heatmap.txt", "heatmap.svg", "grid_scores.tsv"] {
        assert!(f.path("out").join(name).exists(), "{name}");
    }
}

#[test]
fn grid_without_human_scores_is_a_usage_error() {
    let f = Fixture::new();
    fs::remove_file(f.path("human.tsv")).unwrap();
    let out = slide(&["grid", "-c", &f.config(), "--w-max", "2"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let cfg = fs::read_to_string(f.path("run.toml")).unwrap().replace("human_scores = \"human.tsv\"\n", "");
    write(&f.path("run.toml"), &cfg);
    let out = slide(&["grid", "-c", &f.config(), "--w-max", "2"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("human scores"));
}

#[test]
fn grid_needs_two_human_scored_systems() {
    let f = Fixture::new();
    write(&f.path("human.tsv"), "lang_pair\tsystem\tscore\nen-de\tA\t0.9\n");
    let out = slide(&["grid", "-c", &f.config(), "--w-max", "2"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("at least 2"));
}

#[test]
fn synthetic_grid_beats_the_sentence_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let syn = dir.path().join("syn");
    ok(slide(&["synth", "-o", syn.to_str().unwrap(), "--n-docs", "1000", "--seed", "3"]));
    let cfg = syn.join("config.toml");
    ok(slide(&["grid", "-c", cfg.to_str().unwrap(), "--w-max", "4"]));
    let rows = read_tsv(&syn.join("results/grid.tsv"));
    let acc = |w: &str, s: &str| -> f64 {
        rows.iter()
            .find(|r| r["w"] == w && r["s"] == s && r["lang_pair"] == "POOLED")
            .unwrap()["accuracy"]
            .parse()
            .unwrap()
    };
    let best = rows
        .iter()
        .filter(|r| r["lang_pair"] == "POOLED")
        .map(|r| r["accuracy"].parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(acc("1", "1") < best);
    assert!(acc("3", "1") >= acc("1", "1") + 0.15);
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(slide(&["synth", "-o", out.to_str().unwrap(), "--n-docs", "60", "--seed", "7"]));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for name in ["source.txt", "docids.txt", "sysA.txt", "sysB.txt", "sysC.txt", "human.tsv", "config.toml"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn synth_human_ranking_follows_error_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    ok(slide(&[
        "synth", "-o", out.to_str().unwrap(), "--n-docs", "20", "--error-rate", "first=0.1", "--error-rate", "second=0.3",
    ]));
    let rows = read_tsv(&out.join("human.tsv"));
    let score = |n: &str| -> f64 { rows.iter().find(|r| r["system"] == n).unwrap()["score"].parse().unwrap() };
    assert!(score("first") > score("second"));
}

#[test]
fn synth_rejects_degenerate_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = out.to_str().unwrap();
    assert_eq!(code(&slide(&["synth", "-o", o, "--n-docs", "0"])), 2);
    assert_eq!(code(&slide(&["synth", "-o", o, "--error-rate", "only=0.1"])), 2);
    assert_eq!(code(&slide(&["synth", "-o", o, "--doc-len", "5:2"])), 2);
    assert_eq!(code(&slide(&["synth", "-o", o, "--error-rate", "a/b=0.1", "--error-rate", "c=0.2"])), 2);
}

#[test]
fn stats_single_sentence_documents_are_fully_dropped() {
    let f = Fixture::new();
    write(&f.path("docids.txt"), &(0..9).map(|i| format!("doc{i}\n")).collect::<String>());
    let out = ok(slide(&["stats", "-c", &f.config(), "--w-max", "10"]));
    let rows = read_tsv(&f.path("out/dropped.tsv"));
    assert_eq!(rows.len(), 55);
    let w2 = rows.iter().find(|r| r["w"] == "2" && r["s"] == "2").unwrap();
    assert_eq!(w2["dropped_fraction"], "1");
    assert!(stdout(&out).contains("100.0000"));
}

#[test]
fn stats_flags_overlength_chunks() {
    let f = Fixture::new();
    // w=1 chunks: only sentence 0 exceeds 10 tokens (6 source + 6 hypothesis for A)
    ok(slide(&["stats", "-c", &f.config(), "--w-max", "2", "--limit", "11"]));
    let rows = read_tsv(&f.path("out/overlength.tsv"));
    let w1 = rows.iter().find(|r| r["w"] == "1").unwrap();
    assert_eq!(w1["n_chunks"], "18");
    assert_eq!(w1["n_overlength"], "1");
    assert!(f.path("out/overlength.txt").exists());
}

#[test]
fn stats_with_sidecar_token_counts() {
    let f = Fixture::new();
    let dir = f.path("tok");
    fs::create_dir(&dir).unwrap();
    for name in ["A", "B"] {
        let mut t = String::from("doc_id\tsentence_index\tsrc_tokens\thyp_tokens\n");
        let mut idx = BTreeMap::<&str, usize>::new();
        for d in DOCIDS {
            let i = idx.entry(d).or_default();
            t.push_str(&format!("{d}\t{i}\t100\t{}\n", if name == "A" { 1 } else { 500 }));
            *i += 1;
        }
        write(&dir.join(format!("{name}.tsv")), &t);
    }
    ok(slide(&["stats", "-c", &f.config(), "--w-max", "1", "--tokenizer", &format!("sidecar:{}", dir.display()), "--limit", "512"]));
    let rows = read_tsv(&f.path("out/overlength.tsv"));
    assert_eq!(rows[0]["n_overlength"], "9"); // every B sentence: 600 > 512
}

#[test]
fn stats_unknown_tokenizer_is_a_usage_error() {
    let f = Fixture::new();
    let out = slide(&["stats", "-c", &f.config(), "--tokenizer", "bpe"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn validate_reports_and_checks_paths() {
    let f = Fixture::new();
    let out = ok(slide(&["validate", "-c", &f.config()]));
    assert!(stdout(&out).contains("configuration ok"));
    assert!(stdout(&out).contains("1 system pairs"));

    let out = slide(&["validate", "-c", &f.config(), "-w", "2", "-s", "3"]);
    assert_eq!(code(&out), 2);

    fs::remove_file(f.path("b.txt")).unwrap();
    let out = slide(&["validate", "-c", &f.config()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("b.txt"));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let f = Fixture::new();
    assert_eq!(code(&slide(&["score", "-c", &f.config()])), 2); // no window
    assert_eq!(code(&slide(&["score", "-c", &f.config(), "-w", "0"])), 2);
    assert_eq!(code(&slide(&["score", "-c", &f.config(), "-w", "2", "--scorer", "bleu"])), 2);
    assert_eq!(code(&slide(&["score", "-c", &f.config(), "-w", "2", "--weighting", "median"])), 2);
    assert_eq!(code(&slide(&["score", "-c", &f.config(), "-w", "2", "--scorer", "constant"])), 2);
    assert_eq!(code(&slide(&["frobnicate"])), 2);
    assert_eq!(code(&slide(&["score", "-c", "/no/such/config.toml"])), 2);
    write(&f.path("bad.toml"), "window = 3\n");
    assert_eq!(code(&slide(&["validate", "-c", f.path("bad.toml").to_str().unwrap()])), 2);
}

#[test]
fn malformed_inputs_fail_at_ingest() {
    let f = Fixture::new();
    write(&f.path("b.txt"), "only\ntwo\n");
    let out = slide(&["score", "-c", &f.config(), "-w", "2"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("ingest"), "{}", stderr(&out));
}

#[test]
fn window_dropping_everything_fails_at_aggregate() {
    let f = Fixture::new();
    let out = slide(&["score", "-c", &f.config(), "-w", "8"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("aggregate"), "{}", stderr(&out));
}

fn stub_command(extra: &str) -> String {
    format!("command={STUB} {extra}")
}

#[test]
fn external_stdio_scorer_matches_the_builtin() {
    let f = Fixture::new();
    ok(slide(&["grid", "-c", &f.config(), "--w-max", "4"]));
    let builtin = fs::read(f.path("out/grid_scores.tsv")).unwrap();
    ok(slide(&[
        "grid", "-c", &f.config(), "--w-max", "4", "--scorer", "external",
        "--scorer-param", &stub_command("--reorder 5"), "--scorer-param", "window=8",
    ]));
    assert_eq!(builtin, fs::read(f.path("out/grid_scores.tsv")).unwrap());
}

#[test]
fn external_conformance_ten_thousand_requests() {
    let dir = tempfile::tempdir().unwrap();
    let syn = dir.path().join("syn");
    ok(slide(&["synth", "-o", syn.to_str().unwrap(), "--n-docs", "1500", "--doc-len", "7", "--seed", "11"]));
    let cfg = syn.join("config.toml");
    let cfg = cfg.to_str().unwrap();
    // 10,500 single-sentence chunks per system, answered out of order
    ok(slide(&[
        "score", "-c", cfg, "-w", "1", "--scorer", "external",
        "--scorer-param", &stub_command("--reorder 13"), "--scorer-param", "window=64",
    ]));
    let rows = read_tsv(&syn.join("results/scores.tsv"));
    assert!(rows.iter().all(|r| r["n_chunks"] == "10500"));
    let external = fs::read(syn.join("results/scores.tsv")).unwrap();
    ok(slide(&["score", "-c", cfg, "-w", "1", "--scorer", "lexical_overlap"]));
    assert_eq!(external, fs::read(syn.join("results/scores.tsv")).unwrap());
}

#[test]
fn external_failures_are_runtime_errors_in_the_score_stage() {
    let f = Fixture::new();
    for (extra, needle) in [
        ("--fail-on 3", "injected failure"),
        ("--garble-on 2", "malformed reply"),
        ("--crash-on 4", "closed its output"),
        ("--no-handshake", "timed out"),
    ] {
        let out = slide(&[
            "score", "-c", &f.config(), "-w", "1", "--scorer", "external",
            "--scorer-param", &stub_command(extra), "--scorer-param", "timeout_ms=2000",
        ]);
        assert_eq!(code(&out), 1, "{extra}: {}", stderr(&out));
        let err = stderr(&out);
        assert!(err.contains("score stage"), "{extra}: {err}");
        assert!(err.contains(needle), "{extra}: {err}");
        assert!(!f.path("out/scores.tsv").exists(), "{extra}: partial results written");
    }
}

#[test]
fn external_missing_program_is_reported() {
    let f = Fixture::new();
    let out = slide(&[
        "score", "-c", &f.config(), "-w", "1", "--scorer", "external",
        "--scorer-param", "command=/no/such/scorer",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("cannot start"));
}

#[test]
fn external_endpoint_from_environment() {
    let f = Fixture::new();
    let mut stub = Command::new(STUB)
        .args(["--listen", "127.0.0.1:0", "--reorder", "3"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(stub.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_owned();

    let out = Command::new(SLIDE)
        .args(["score", "-c", &f.config(), "-w", "2", "--scorer", "external"])
        .env("SLIDE_SCORER_ENDPOINT", &addr)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stub.wait().unwrap().success());
    let external = f.scores();
    ok(slide(&["score", "-c", &f.config(), "-w", "2"]));
    assert_eq!(external, f.scores());
}

#[test]
fn external_without_endpoint_is_a_usage_error() {
    let f = Fixture::new();
    let out = slide(&["score", "-c", &f.config(), "-w", "2", "--scorer", "external"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("SLIDE_SCORER_ENDPOINT"));
}
