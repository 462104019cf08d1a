//! Tokenized input/output samples for the mined pairs.
use skill_corpus::dataset::{build_seq2seq_samples, Seq2SeqOptions};
use skill_corpus::pairs::mine_pairs;
use skill_corpus::tokenizer::train_tokenizer;
use skill_corpus::{Origin, SourceFile};

fn main() -> skill_corpus::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/pairs");
    let mut pairs = Vec::new();
    let mut texts = Vec::new();
    for name in ["comment_function.il", "function_completion.il", "comment_code.il"] {
        let text = std::fs::read_to_string(format!("{dir}/{name}")).expect("fixture");
        pairs.extend(mine_pairs(&SourceFile::new(Origin::PrimaryProprietary, name, text.as_str())));
        texts.push(text);
    }
    let vocab = train_tokenizer(&texts, 600)?;
    for s in build_seq2seq_samples(&pairs, &vocab, &Seq2SeqOptions::default()) {
        println!("{}: {} input ids, {} output ids", &s.pair_id[..12], s.input_ids.len(), s.output_ids.len());
    }
    Ok(())
}
