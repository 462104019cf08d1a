//! Runs the pipeline on the mini corpus and scores the bundled predictions.
use skill_corpus::eval::{evaluate_predictions, read_predictions, EvalOptions};
use skill_corpus::io::read_jsonl;
use skill_corpus::pipeline::{run_pipeline, PipelineConfig};
use skill_corpus::tokenizer::SubwordVocab;
use skill_corpus::{Pair, SourceFile};

fn main() -> skill_corpus::Result<()> {
    let fixtures = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out = std::env::temp_dir().join("skill-corpus-evaluate-example");
    let mut config = PipelineConfig::load(&fixtures.join("mini_corpus.toml"))?;
    config.out_dir = out.clone();
    let outcome = run_pipeline(&config)?;
    let files: Vec<SourceFile> = read_jsonl(&out.join("linted.jsonl"))?;
    let pairs: Vec<Pair> = read_jsonl(&out.join("pairs.jsonl"))?;
    let vocab = SubwordVocab::load(&out.join("vocab.txt"))?;
    let predictions = read_predictions(&fixtures.join("eval/predictions.jsonl"))?;
    let report = evaluate_predictions(&predictions, &outcome.manifest, &vocab, &files, &pairs, &EvalOptions::default())?;
    print!("{report}");
    Ok(())
}
