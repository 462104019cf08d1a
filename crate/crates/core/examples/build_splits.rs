//! Balanced validation and test splits over the mini corpus.
use skill_corpus::dataset::{make_splits, SplitOptions};
use skill_corpus::pipeline::{ingest, mine_corpus, SourceConfig};
use skill_corpus::{Origin, Split, TrainingStrategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_corpus");
    let sources = [
        ("primary", Origin::PrimaryProprietary),
        ("secondary", Origin::SecondaryProprietary),
        ("repo", Origin::RepoSearch),
        ("code", Origin::CodeSearch),
    ]
    .map(|(dir, origin)| SourceConfig { path: root.join(dir), origin });
    let files = ingest(&sources)?;
    let pairs = mine_corpus(&files, &Default::default());
    let outcome = make_splits(&files, &pairs, 13, TrainingStrategy::default(), &SplitOptions::default())?;
    for split in [Split::Train, Split::Val, Split::Test] {
        let r = outcome.manifest.split_record(split);
        println!("{:<5} {:>2} files, pairs {:?}", split.as_str(), r.files, r.pairs);
    }
    println!("balanced after {} attempt(s)", outcome.attempts);
    Ok(())
}
