use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::Pair;
use crate::syntax::lex;
use crate::tokenizer::SubwordVocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seq2SeqOptions {
    pub max_input_ids: usize,
    pub max_output_ids: usize,
    pub max_comment_words: usize,
}

impl Default for Seq2SeqOptions {
    fn default() -> Self {
        Seq2SeqOptions {
            max_input_ids: 1024,
            max_output_ids: 512,
            max_comment_words: 150,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seq2SeqSample {
    pub pair_id: String,
    pub input_ids: Vec<u32>,
    pub output_ids: Vec<u32>,
    pub input_text: String,
    pub output_text: String,
}

/// Keeps the first `max_words` whitespace-separated words across all
/// comments of `text`. A truncated comment is rewritten with single spaces
/// between its remaining words; comments past the budget are dropped.
pub fn truncate_comment_words(text: &str, max_words: usize) -> String {
    let mut budget = max_words;
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for token in lex(text).iter().filter(|t| t.kind.is_comment()) {
        let (open, body, close) = match token.text.strip_prefix("/*") {
            Some(rest) => ("/*", rest.strip_suffix("*/").unwrap_or(rest), if rest.ends_with("*/") { "*/" } else { "" }),
            None => {
                let body = token.text.trim_start_matches(';');
                (&token.text[..token.text.len() - body.len()], body, "")
            }
        };
        let words: Vec<&str> = body.split_whitespace().collect();
        if words.len() <= budget {
            budget -= words.len();
            continue;
        }
        out.push_str(&text[pos..token.span.start]);
        if budget > 0 {
            out.push_str(open);
            out.push(' ');
            out.push_str(&words[..budget].join(" "));
            if !close.is_empty() {
                out.push(' ');
                out.push_str(close);
            }
            budget = 0;
        }
        pos = token.span.end;
    }
    out.push_str(&text[pos..]);
    out
}

/// Token-id samples for each pair: comment words in the input are capped,
/// the output is the comment-free reference, and both sides are cut at the
/// tail to their id limits.
pub fn build_seq2seq_samples(pairs: &[Pair], vocab: &SubwordVocab, options: &Seq2SeqOptions) -> Vec<Seq2SeqSample> {
    pairs
        .par_iter()
        .map(|pair| {
            let input_text = truncate_comment_words(&pair.input_text, options.max_comment_words);
            let output_text = pair.reference_output();
            let mut input_ids = vocab.encode(&input_text);
            input_ids.truncate(options.max_input_ids);
            let mut output_ids = vocab.encode(&output_text);
            output_ids.truncate(options.max_output_ids);
            Seq2SeqSample {
                pair_id: pair.id.clone(),
                input_ids,
                output_ids,
                input_text,
                output_text,
            }
        })
        .collect()
}
