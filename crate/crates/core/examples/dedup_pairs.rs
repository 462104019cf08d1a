//! Nested pairs are dropped; only pairs contained in no other pair remain.
use skill_corpus::pairs::{dedup_pairs, mine_pairs};
use skill_corpus::{Origin, SourceFile};

fn main() {
    let text = "/* Sum the widths of all shapes. */\nprocedure(totalWidth(shapes)\n  /* start at zero */\n  total = 0\n  foreach(s shapes\n    /* add this one */\n    total = total + s~>width\n  )\n  total\n)\n";
    let pairs = mine_pairs(&SourceFile::new(Origin::RepoSearch, "sum.il", text));
    println!("{} pairs mined", pairs.len());
    for p in &pairs {
        println!("  {:?} {:?}", p.kind, p.input_text);
    }
    let kept = dedup_pairs(pairs);
    println!("{} top-level", kept.len());
    for p in &kept {
        println!("  {:?} {:?}", p.kind, p.input_text);
    }
}
