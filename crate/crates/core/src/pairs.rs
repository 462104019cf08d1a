//! Mining of supervised pairs from cleaned files, and containment-based
//! deduplication.

use std::collections::HashMap;

use aho_corasick::AhoCorasick;
use serde::{Deserialize, Serialize};

use crate::model::{Pair, PairKind, SourceFile, Span};
use crate::syntax::{
    extract_comment_blocks, extract_procedures, lex, parse, Form, FormKind, ProcedureInfo,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MineOptions {
    /// A body with more statements than this is also split.
    pub long_body_statements: usize,
    /// A body with more tokens than this is also split.
    pub long_body_tokens: usize,
}

impl Default for MineOptions {
    fn default() -> Self {
        MineOptions {
            long_body_statements: 8,
            long_body_tokens: 256,
        }
    }
}

pub fn mine_pairs(file: &SourceFile) -> Vec<Pair> {
    mine_pairs_with(file, &MineOptions::default())
}

/// Extracts comment-function, function-completion and comment-code pairs.
/// Forms with unbalanced delimiters yield nothing.
pub fn mine_pairs_with(file: &SourceFile, options: &MineOptions) -> Vec<Pair> {
    let tokens = lex(&file.text);
    let forms = parse(&tokens);
    let broken: Vec<Span> = forms
        .iter()
        .filter(|f| !f.issues.is_empty())
        .map(|f| f.span)
        .collect();
    let usable = |span: Span| !broken.iter().any(|b| b.overlaps(&span));

    let mut pairs = Vec::new();
    let mut push = |kind: PairKind, input: Span, output: Span, partial: bool| {
        if output.is_empty() || !usable(input.cover(&output)) {
            return;
        }
        if let Ok(mut pair) = Pair::new(file, kind, input, output) {
            pair.partial_body = partial;
            pairs.push(pair);
        }
    };

    for proc in extract_procedures(&forms) {
        let Some(body) = code_span(&proc.body_forms) else {
            continue;
        };
        match proc.preceding_comment {
            Some(comment) => push(
                PairKind::CF,
                Span::new(comment.start, proc.header_span.end),
                body,
                false,
            ),
            None => {
                let header = proc.header_span;
                push(PairKind::FC, header, body, false);
                if let Some((input, output)) = split_long_body(&proc, &tokens, options) {
                    push(PairKind::FC, input, output, true);
                }
            }
        }
    }

    for block in extract_comment_blocks(&forms) {
        if let Some(next) = block.following_form {
            push(PairKind::CC, block.comment_span, next.span, false);
        }
    }

    pairs.sort_by(|a, b| {
        (a.input_span.start, a.kind, a.output_span).cmp(&(b.input_span.start, b.kind, b.output_span))
    });
    pairs.dedup_by(|a, b| a.id == b.id);
    pairs
}

/// Span from the first to the last code form, leaving out comments at
/// either end.
fn code_span(forms: &[Form]) -> Option<Span> {
    let mut code = forms.iter().filter(|f| f.kind != FormKind::CommentBlock);
    let first = code.next()?;
    let last = code.last().unwrap_or(first);
    Some(Span::new(first.span.start, last.span.end))
}

/// For a long body, the header plus the statements before the split point
/// as input and the remaining statements as output. A body made of one
/// block construct (`let`, `prog`, ...) is split inside that construct.
fn split_long_body(
    proc: &ProcedureInfo,
    tokens: &[crate::syntax::Token<'_>],
    options: &MineOptions,
) -> Option<(Span, Span)> {
    let mut statements: Vec<&Form> = proc
        .body_forms
        .iter()
        .filter(|f| f.kind != FormKind::CommentBlock)
        .collect();
    if let [only] = statements[..] {
        if only.kind == FormKind::Construct {
            statements = only.code_children().collect();
        }
    }
    let body = code_span(&proc.body_forms)?;
    let body_tokens = tokens
        .iter()
        .filter(|t| !t.kind.is_comment() && body.contains(&t.span))
        .count();
    let long = statements.len() > options.long_body_statements || body_tokens > options.long_body_tokens;
    if !long || statements.len() < 2 {
        return None;
    }
    let first = statements[0].span.start;
    let last = statements[statements.len() - 1].span.end;
    let mid = first + (last - first) / 2;
    // Boundary k sits between statement k-1 and statement k.
    let k = (1..statements.len())
        .min_by_key(|&k| {
            let boundary = statements[k - 1].span.end;
            (boundary.abs_diff(mid), k)
        })
        .expect("at least two statements");
    let input = Span::new(proc.def_span.start, statements[k - 1].span.end);
    let output = Span::new(statements[k].span.start, last);
    Some((input, output))
}

/// Whitespace-normalized token text with a leading and trailing space, so
/// substring tests only match at token boundaries.
pub fn normalized(text: &str) -> String {
    let mut out = String::from(" ");
    for token in lex(text) {
        for word in token.text.split_ascii_whitespace() {
            out.push_str(word);
            out.push(' ');
        }
    }
    out
}

/// Sets `top_level` on every pair. A pair is nested when its normalized
/// region (input through output) sits strictly inside another pair's
/// region. Among pairs with identical regions only the first is top-level.
pub fn mark_top_level(pairs: &mut [Pair]) {
    if pairs.is_empty() {
        return;
    }
    let contents: Vec<String> = pairs.iter().map(|p| normalized(&p.region_text())).collect();
    let mut first: HashMap<&str, usize> = HashMap::new();
    let mut nested: Vec<bool> = contents
        .iter()
        .enumerate()
        .map(|(i, c)| *first.entry(c.as_str()).or_insert(i) != i)
        .collect();
    let matcher = AhoCorasick::new(&contents).expect("patterns build");
    for haystack in first.keys() {
        for m in matcher.find_overlapping_iter(haystack) {
            let p = m.pattern().as_usize();
            if contents[p].len() < haystack.len() {
                nested[p] = true;
            }
        }
    }
    for (pair, inside) in pairs.iter_mut().zip(nested) {
        pair.top_level = !inside;
    }
}

/// Marks top-level pairs and keeps only those, in their original order.
pub fn dedup_pairs(mut pairs: Vec<Pair>) -> Vec<Pair> {
    mark_top_level(&mut pairs);
    pairs.into_iter().filter(|p| p.top_level).collect()
}
