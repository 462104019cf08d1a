//! Strips metadata, commented-out code and non-ASCII text, then rewrites
//! line comments as block comments.
use skill_corpus::preprocess::{clean_text, normalize_comments, strip_comments};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/mini_corpus");
    for rel in ["secondary/legacy.il", "code/layout_scripts/zh_comments.il", "secondary/netlist.il"] {
        let raw = std::fs::read_to_string(format!("{dir}/{rel}")).expect("fixture");
        let cleaned = normalize_comments(&clean_text(&raw));
        println!("== {rel}\n{cleaned}");
        println!("-- without comments\n{}", strip_comments(&cleaned));
    }
}
