use std::path::{Path, PathBuf};

use skill_corpus::pipeline::{run_pipeline, PipelineConfig, SourceConfig};
use skill_corpus::{Error, Origin, Split, TrainingStrategy};

fn config(out: &Path) -> PipelineConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_corpus.toml");
    let mut c = PipelineConfig::load(&path).unwrap();
    c.out_dir = out.to_path_buf();
    c
}

#[test]
fn empty_source_dir_fails_explicitly() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let c = PipelineConfig::new(
        vec![SourceConfig {
            path: src.path().to_path_buf(),
            origin: Origin::PrimaryProprietary,
        }],
        out.path(),
    );
    let err = run_pipeline(&c).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "ingest", .. }), "{err}");
    assert!(err.to_string().contains("no input files"), "{err}");
}

#[test]
fn rerun_reuses_everything_and_fresh_runs_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_pipeline(&config(a.path())).unwrap();
    assert!(first.skipped.is_empty());
    let again = run_pipeline(&config(a.path())).unwrap();
    assert!(again.executed.is_empty(), "{:?}", again.executed);
    assert_eq!(again.skipped, first.executed);
    assert_eq!(again.manifest.digest(), first.manifest.digest());
    let elsewhere = run_pipeline(&config(b.path())).unwrap();
    assert_eq!(elsewhere.manifest.digest(), first.manifest.digest());
    for name in ["pairs.jsonl", "splits.jsonl", "vocab.txt", "mlm.jsonl", "seq2seq_test.jsonl"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_change_reruns_only_downstream_stages() {
    let out = tempfile::tempdir().unwrap();
    run_pipeline(&config(out.path())).unwrap();
    let mut c = config(out.path());
    c.seed += 1;
    let second = run_pipeline(&c).unwrap();
    for stage in ["ingest", "clean", "lint", "mine", "filter"] {
        assert!(second.skipped.iter().any(|s| s == stage), "{stage} reran");
    }
    assert!(second.executed.iter().any(|s| s == "split"));
}

#[test]
fn tampered_artifact_is_rebuilt() {
    let out = tempfile::tempdir().unwrap();
    run_pipeline(&config(out.path())).unwrap();
    std::fs::write(out.path().join("vocab.txt"), "garbage").unwrap();
    let second = run_pipeline(&config(out.path())).unwrap();
    assert!(second.executed.iter().any(|s| s == "train-tokenizer"));
    assert!(!second.executed.iter().any(|s| s == "mine"));
}

#[test]
fn every_strategy_runs() {
    for strategy in TrainingStrategy::enumerate() {
        let out = tempfile::tempdir().unwrap();
        let mut c = config(out.path());
        c.strategy = strategy;
        let outcome = run_pipeline(&c).unwrap_or_else(|e| panic!("{strategy:?}: {e}"));
        let m = &outcome.manifest;
        assert_eq!(m.export("export-mlm").is_some(), strategy.self_supervised, "{strategy:?}");
        assert_eq!(m.export("export-seq2seq-train").is_some(), strategy.supervised, "{strategy:?}");
        assert!(m.export("export-seq2seq-test").is_some());
        assert!(m.pairs_in(Split::Test).count() > 0);
    }
}

#[test]
fn schema_violation_is_reported_with_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path: PathBuf = dir.path().join("bad.toml");
    std::fs::write(&path, "[[sources]]\npath = \"x\"\norigin = \"primary-proprietary\"\n[mlm]\nspans = 3\n").unwrap();
    let err = PipelineConfig::load(&path).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("bad.toml"), "{err}");
}
