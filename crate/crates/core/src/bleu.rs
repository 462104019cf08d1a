//! Unsmoothed BLEU over token sequences.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::Pair;
use crate::tokenizer::SubwordVocab;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BleuError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("n-gram order must be between 1 and {MAX_ORDER}, got {0}")]
    InvalidOrder(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuOptions {
    pub brevity_penalty: bool,
}

impl Default for BleuOptions {
    fn default() -> Self {
        BleuOptions {
            brevity_penalty: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    /// Clipped precision per order, starting at unigrams.
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
    /// The candidate was empty; the score is 0.
    pub empty_candidate: bool,
    /// The candidate had no n-grams of some requested order; the score is 0.
    pub missing_ngrams: bool,
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram precision. `None` when the candidate has no n-grams of
/// that order.
pub fn modified_precision<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> Option<f64> {
    let cand = ngram_counts(candidate, n);
    let total: usize = cand.values().sum();
    if total == 0 {
        return None;
    }
    let refs = ngram_counts(reference, n);
    let matched: usize = cand
        .iter()
        .map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0)))
        .sum();
    Some(matched as f64 / total as f64)
}

pub fn brevity_penalty(candidate_len: usize, reference_len: usize) -> f64 {
    if candidate_len == 0 {
        0.0
    } else if candidate_len < reference_len {
        (1.0 - reference_len as f64 / candidate_len as f64).exp()
    } else {
        1.0
    }
}

fn score_orders<T: Eq + Hash>(
    candidate: &[T],
    reference: &[T],
    orders: std::ops::RangeInclusive<usize>,
    options: BleuOptions,
) -> std::result::Result<BleuScore, BleuError> {
    if reference.is_empty() {
        return Err(BleuError::EmptyReference);
    }
    let bp = if options.brevity_penalty {
        brevity_penalty(candidate.len(), reference.len())
    } else {
        1.0
    };
    let raw: Vec<Option<f64>> = orders
        .clone()
        .map(|n| modified_precision(candidate, reference, n))
        .collect();
    let missing = raw.iter().any(Option::is_none);
    let precisions: Vec<f64> = raw.iter().map(|p| p.unwrap_or(0.0)).collect();
    let score = if candidate.is_empty() || precisions.iter().any(|&p| p == 0.0) {
        0.0
    } else {
        let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
        bp * mean_log.exp()
    };
    Ok(BleuScore {
        score,
        precisions,
        brevity_penalty: bp,
        candidate_len: candidate.len(),
        reference_len: reference.len(),
        empty_candidate: candidate.is_empty(),
        missing_ngrams: missing,
    })
}

/// Brevity penalty times the geometric mean of the 1- to 4-gram clipped
/// precisions. No smoothing: any zero precision gives 0.
pub fn bleu<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> std::result::Result<BleuScore, BleuError> {
    bleu_with(candidate, reference, BleuOptions::default())
}

pub fn bleu_with<T: Eq + Hash>(
    candidate: &[T],
    reference: &[T],
    options: BleuOptions,
) -> std::result::Result<BleuScore, BleuError> {
    score_orders(candidate, reference, 1..=MAX_ORDER, options)
}

/// Score from the single n-gram precision of order `n`.
pub fn bleu_n<T: Eq + Hash>(
    candidate: &[T],
    reference: &[T],
    n: usize,
    options: BleuOptions,
) -> std::result::Result<BleuScore, BleuError> {
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(BleuError::InvalidOrder(n));
    }
    score_orders(candidate, reference, n..=n, options)
}

/// BLEU of two texts under the vocabulary's tokenization.
pub fn bleu_text(vocab: &SubwordVocab, candidate: &str, reference: &str, options: BleuOptions) -> Result<BleuScore> {
    Ok(bleu_with(&vocab.encode(candidate), &vocab.encode(reference), options)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusBleu {
    pub mean: f64,
    pub scores: Vec<(String, f64)>,
    /// Pairs without a prediction. They are not scored.
    pub missing: Vec<String>,
}

/// Per-pair BLEU of predictions against comment-free reference outputs,
/// and their arithmetic mean.
pub fn corpus_bleu(
    pairs: &[Pair],
    predictions: &HashMap<String, String>,
    vocab: &SubwordVocab,
    options: BleuOptions,
) -> Result<CorpusBleu> {
    let mut scores = Vec::new();
    let mut missing = Vec::new();
    for pair in pairs {
        match predictions.get(&pair.id) {
            Some(prediction) => {
                let score = bleu_text(vocab, prediction, &pair.reference_output(), options)?;
                scores.push((pair.id.clone(), score.score));
            }
            None => missing.push(pair.id.clone()),
        }
    }
    let mean = if scores.is_empty() {
        0.0
    } else {
        scores.iter().map(|(_, s)| s).sum::<f64>() / scores.len() as f64
    };
    Ok(CorpusBleu {
        mean,
        scores,
        missing,
    })
}
