//! Extracts comment-function, function-completion and comment-code pairs.
use skill_corpus::pairs::mine_pairs;
use skill_corpus::{Origin, SourceFile};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/pairs");
    for name in ["comment_function.il", "function_completion.il", "comment_code.il"] {
        let text = std::fs::read_to_string(format!("{dir}/{name}")).expect("fixture");
        for pair in mine_pairs(&SourceFile::new(Origin::PrimaryProprietary, name, text)) {
            println!("{name}: {:?} input {} output {}", pair.kind, pair.input_span, pair.output_span);
            println!("  input:  {:?}", pair.input_text);
            println!("  output: {:?}", pair.output_text);
        }
    }
}
