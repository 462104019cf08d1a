use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SUBCOMMANDS: [&str; 16] = [
    "ingest",
    "clean",
    "lint",
    "mine",
    "mine-remote",
    "filter",
    "split",
    "train-tokenizer",
    "export-mlm",
    "export-seq2seq",
    "bleu",
    "delta-liq",
    "evaluate",
    "correlate",
    "survey-pack",
    "run",
];

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skill-corpus"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn every_subcommand_takes_the_shared_flags() {
    for sub in SUBCOMMANDS {
        let help = String::from_utf8(cli(&[sub, "--help"]).stdout).unwrap();
        for flag in ["--seed", "--manifest", "--out"] {
            assert!(help.contains(flag), "{sub} lacks {flag}");
        }
    }
}

#[test]
fn lint_exit_code_follows_grade() {
    let corpus = fixtures().join("mini_corpus");
    let pass = cli(&["lint", path(&corpus.join("primary/ring.il"))]);
    assert_eq!(pass.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&pass.stdout).contains("grade pass, iq 100"));
    let fail = cli(&["lint", path(&corpus.join("repo/tools/broken.il"))]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("unbalanced-delimiters"));
}

#[test]
fn clean_keeps_relative_paths() {
    let out = tempfile::tempdir().unwrap();
    let o = cli(&["clean", path(&fixtures().join("mini_corpus")), "--out", path(out.path())]);
    assert!(o.status.success());
    let cleaned = std::fs::read_to_string(out.path().join("secondary/legacy.il")).unwrap();
    assert!(!cleaned.contains("Copyright"));
    assert!(!cleaned.contains("old version"));
    assert!(out.path().join("repo/acme/pcell/via_array.il").is_file());
    let zh = std::fs::read_to_string(out.path().join("code/layout_scripts/zh_comments.il")).unwrap();
    assert!(zh.is_ascii());
}

#[test]
fn mine_records_pairs_in_the_manifest() {
    let out = tempfile::tempdir().unwrap();
    let manifest = out.path().join("m.jsonl");
    let o = cli(&["mine", path(&fixtures().join("pairs")), "--manifest", path(&manifest), "--out", path(out.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&manifest).unwrap();
    let kinds: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["record_type"] == "pair")
        .map(|v| v["kind"].as_str().unwrap().to_string())
        .collect();
    let mut sorted = kinds.clone();
    sorted.sort();
    assert_eq!(sorted, ["CC", "CF", "FC"]);
}

#[test]
fn bleu_brevity_penalty_flag() {
    let out = tempfile::tempdir().unwrap();
    let vocab = out.path().join("vocab.txt");
    let o = cli(&["train-tokenizer", path(&fixtures().join("pairs")), "--vocab-size", "400", "--out", path(out.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let score = |extra: &[&str]| {
        let mut args = vec!["bleu", "a b c d", "a b c d e", "--text", "--vocab", path(&vocab)];
        args.extend_from_slice(extra);
        String::from_utf8(cli(&args).stdout).unwrap()
    };
    assert!(score(&["--no-brevity-penalty"]).starts_with("bleu 1.000000"));
    assert!(!score(&[]).starts_with("bleu 1.000000"));
}

#[test]
fn run_reports_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("empty")).unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "[[sources]]\npath = \"empty\"\norigin = \"repo-search\"\n").unwrap();
    let o = cli(&["run", "--config", path(&config)]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ingest") && err.contains("no input files"), "{err}");
}

#[test]
fn run_then_evaluate_and_correlate() {
    let out = tempfile::tempdir().unwrap();
    let o = cli(&["run", "--config", path(&fixtures().join("mini_corpus.toml")), "--out", path(out.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = |name: &str| out.path().join(name);
    let o = cli(&[
        "evaluate",
        path(&p("linted.jsonl")),
        "--pairs",
        path(&p("pairs.jsonl")),
        "--predictions",
        path(&fixtures().join("eval/predictions.jsonl")),
        "--vocab",
        path(&p("vocab.txt")),
        "--manifest",
        path(&p("manifest.jsonl")),
        "--out",
        path(out.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("copy-reference") && table.contains("truncated"));
    let o = cli(&[
        "correlate",
        "--report",
        path(&p("report.json")),
        "--human",
        path(&fixtures().join("eval/human_scores.csv")),
        "--out",
        path(out.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FC: human scores have zero variance"));
}
