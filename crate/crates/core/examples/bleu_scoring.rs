//! Unsmoothed BLEU with and without the brevity penalty.
use skill_corpus::bleu::{bleu_n, bleu_with, BleuOptions};

fn main() -> Result<(), skill_corpus::bleu::BleuError> {
    let ids = |s: &str| s.split(' ').map(|w| w.as_bytes()[0] as u32).collect::<Vec<_>>();
    let cases = [("a b c d e f", "a b c x e f"), ("a b c d", "a b c d e"), ("a b c d e", "a b c d e")];
    for (cand, reference) in cases {
        let (c, r) = (ids(cand), ids(reference));
        let with = bleu_with(&c, &r, BleuOptions::default())?;
        let without = bleu_with(&c, &r, BleuOptions { brevity_penalty: false })?;
        println!("{cand:<12} | {reference:<12} bleu {:.4} (no bp {:.4}) p={:?}", with.score, without.score, with.precisions);
    }
    let p2 = bleu_n(&ids("a b c d e f"), &ids("a b c x e f"), 2, BleuOptions::default())?;
    println!("bigram-only score {:.4}", p2.score);
    Ok(())
}
