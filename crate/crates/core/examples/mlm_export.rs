//! Span corruption of one tokenized chunk and its reconstruction.
use rand::SeedableRng;
use skill_corpus::dataset::{corrupt_chunk, reconstruct, MlmOptions};
use skill_corpus::tokenizer::train_tokenizer;

fn main() -> skill_corpus::Result<()> {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/mini_corpus/primary/ring.il"))
        .expect("fixture");
    let vocab = train_tokenizer(&[text.as_str()], 500)?;
    let ids = vocab.encode(&text);
    let options = MlmOptions { chunk_len: 128, ..MlmOptions::default() };
    let chunk = &ids[..options.chunk_len.min(ids.len())];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let (corrupted, targets) = corrupt_chunk(chunk, &options, &mut rng);
    let masked = targets.iter().filter(|&&id| !skill_corpus::tokenizer::is_sentinel(id)).count();
    println!("chunk {} ids, {masked} masked ({:.1}%)", chunk.len(), 100.0 * masked as f64 / chunk.len() as f64);
    println!("corrupted: {corrupted:?}");
    println!("targets:   {targets:?}");
    assert_eq!(reconstruct(&corrupted, &targets), chunk);
    Ok(())
}
