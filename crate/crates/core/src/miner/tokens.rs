use std::collections::BTreeMap;

use crate::dataset::rng_for;
use crate::syntax::{lex, TokenKind};

/// Identifiers seen more than `min_count` times across `texts`, reduced to a
/// seeded uniform sample of `fraction` of them and sorted.
pub fn collect_query_tokens<S: AsRef<str>>(texts: &[S], min_count: usize, fraction: f64, seed: u64) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for text in texts {
        for token in lex(text.as_ref()) {
            if token.kind == TokenKind::Identifier {
                *counts.entry(token.text).or_default() += 1;
            }
        }
    }
    let frequent: Vec<&str> = counts.into_iter().filter(|(_, c)| *c > min_count).map(|(t, _)| t).collect();
    let take = ((frequent.len() as f64 * fraction.clamp(0.0, 1.0)).round() as usize).min(frequent.len());
    let mut rng = rng_for(seed, "query-tokens", 0);
    let mut picked: Vec<String> = rand::seq::index::sample(&mut rng, frequent.len(), take)
        .into_iter()
        .map(|i| frequent[i].to_string())
        .collect();
    picked.sort();
    picked
}
