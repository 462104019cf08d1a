//! Trains a byte-level subword vocabulary and shows how it segments code.
use skill_corpus::pipeline::{ingest, SourceConfig};
use skill_corpus::tokenizer::train_tokenizer;
use skill_corpus::Origin;

fn main() -> skill_corpus::Result<()> {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_corpus");
    let files = ingest(&[SourceConfig { path: root, origin: Origin::PrimaryProprietary }])?;
    let texts: Vec<&str> = files.iter().map(|f| f.text.as_str()).collect();
    let vocab = train_tokenizer(&texts, 1000)?;
    let line = "cv = dbOpenCellViewByType(lib cell \"layout\")\n";
    let ids = vocab.encode(line);
    println!("{} symbols; {} bytes -> {} ids", vocab.len(), line.len(), ids.len());
    println!("{:?}", vocab.tokenize(line));
    assert_eq!(vocab.decode(&ids)?, line);
    Ok(())
}
