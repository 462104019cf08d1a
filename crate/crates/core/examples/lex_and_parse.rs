//! Lexes a PCell definition, checks the lossless round trip and prints the
//! parsed forms.
use skill_corpus::syntax::{lex, parse, reassemble};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/pairs/comment_function.il");
    let text = std::fs::read_to_string(path).expect("fixture");
    let tokens = lex(&text);
    assert_eq!(reassemble(&text, &tokens).as_deref(), Some(text.as_str()));
    println!("{} tokens, round trip exact", tokens.len());
    for t in tokens.iter().take(12) {
        println!("  line {:>2} {:<14} {:?}", t.line, format!("{:?}", t.kind), t.text);
    }
    for form in parse(&tokens) {
        println!("{:?} {} name={:?} params={:?}", form.kind, form.span, form.name, form.params);
    }
}
