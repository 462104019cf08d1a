//! Runs every stage on the mini corpus twice; the second run reuses all
//! artifacts.
use skill_corpus::pipeline::{run_pipeline, PipelineConfig};

fn main() -> skill_corpus::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_corpus.toml");
    let mut config = PipelineConfig::load(&path)?;
    config.out_dir = std::env::temp_dir().join("skill-corpus-pipeline-example");
    let _ = std::fs::remove_dir_all(&config.out_dir);
    let first = run_pipeline(&config)?;
    println!("executed {:?}", first.executed);
    for record in first.manifest.exports() {
        println!("  {:<22} {:>4} records  {}", record.name, record.count, &record.digest[..16]);
    }
    let second = run_pipeline(&config)?;
    println!("rerun executed {:?}, digest unchanged: {}", second.executed, first.manifest.digest() == second.manifest.digest());
    println!("outputs in {}", config.out_dir.display());
    Ok(())
}
