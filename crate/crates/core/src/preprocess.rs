//! File-level cleaning applied before mining and training-set construction.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::model::SourceFile;
use crate::syntax::{lex, TokenKind};

/// Default markers of commented-out code.
pub const CODE_KEYWORDS: [&str; 4] = ["printf(", "procedure(", "let(", "setq "];

static METADATA: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?ix)
        \b(disclaimer|copyright|liability|author)\b
        | [a-z0-9._%+-]+@[a-z0-9-]+(\.[a-z0-9-]+)+
        | \bversion\s*:
        | \(c\)\s*\d{4}",
    )
    .expect("valid regex")
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanOptions {
    pub code_keywords: Vec<String>,
}

impl Default for CleanOptions {
    fn default() -> Self {
        CleanOptions {
            code_keywords: CODE_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Keeps the first file of every distinct text, preserving order.
pub fn dedup_files(files: Vec<SourceFile>) -> Vec<SourceFile> {
    let mut seen = HashSet::new();
    files.into_iter().filter(|f| seen.insert(f.id.clone())).collect()
}

pub fn clean_text(text: &str) -> String {
    clean_text_with(text, &CleanOptions::default())
}

/// Removes metadata comments, commented-out code, content-free comments and
/// non-ASCII characters.
///
/// Non-ASCII removal runs first so that no later step can expose new
/// comment boundaries; the result is then a fixed point.
pub fn clean_text_with(text: &str, options: &CleanOptions) -> String {
    let ascii: String = text.chars().filter(char::is_ascii).collect();
    let tokens = lex(&ascii);
    let mut edits: Vec<Edit> = Vec::new();
    for token in tokens.iter().filter(|t| t.kind.is_comment()) {
        let span = (token.span.start, token.span.end);
        if token.kind == TokenKind::LineComment {
            if comment_is_removable(token.text, options) {
                edits.push(Edit::Remove(span.0, span.1));
            }
            continue;
        }
        // Block comments lose their metadata lines, or go entirely when
        // what is left is commented-out code, metadata or empty.
        let kept: String = token
            .text
            .split_inclusive('\n')
            .enumerate()
            .filter(|(i, line)| *i == 0 || line.contains("*/") || !METADATA.is_match(line))
            .map(|(_, line)| line)
            .collect();
        if comment_is_removable(&kept, options) {
            edits.push(Edit::Remove(span.0, span.1));
        } else if kept.len() != token.text.len() {
            edits.push(Edit::Replace(span.0, span.1, kept));
        }
    }
    apply_edits(&ascii, edits)
}

fn comment_is_removable(text: &str, options: &CleanOptions) -> bool {
    METADATA.is_match(text) || comment_is_code(text, options) || comment_is_blank(text)
}

fn comment_is_code(text: &str, options: &CleanOptions) -> bool {
    options.code_keywords.iter().any(|k| text.contains(k.as_str()))
}

/// True when the comment body holds no letters or digits.
fn comment_is_blank(text: &str) -> bool {
    !comment_body(text).chars().any(|c| c.is_ascii_alphanumeric())
}

fn comment_body(text: &str) -> &str {
    if let Some(rest) = text.strip_prefix("/*") {
        rest.strip_suffix("*/").unwrap_or(rest)
    } else {
        text.trim_start_matches(';')
    }
}

enum Edit {
    Remove(usize, usize),
    Replace(usize, usize, String),
}

/// Applies non-overlapping comment edits, keeping code intact: a space is
/// inserted where removal would glue two tokens together, touched lines
/// lose trailing whitespace and lines emptied by removal disappear.
fn apply_edits(text: &str, mut edits: Vec<Edit>) -> String {
    if edits.is_empty() {
        return text.to_string();
    }
    edits.sort_by_key(|e| match e {
        Edit::Remove(s, _) | Edit::Replace(s, _, _) => *s,
    });
    let mut lines = LineBuilder::default();
    let mut pos = 0;
    for edit in edits {
        let (start, end, replacement) = match edit {
            Edit::Remove(s, e) => (s, e, None),
            Edit::Replace(s, e, r) => (s, e, Some(r)),
        };
        lines.push(&text[pos..start], false);
        match replacement {
            Some(r) => lines.push(&r, true),
            None => {
                lines.touch();
                for _ in text[start..end].matches('\n') {
                    lines.push("\n", true);
                }
                let before = lines.last_char();
                let after = text[end..].chars().next();
                if before.is_some_and(|c| !c.is_ascii_whitespace())
                    && after.is_some_and(|c| !c.is_ascii_whitespace())
                {
                    lines.push(" ", true);
                }
            }
        }
        pos = end;
    }
    lines.push(&text[pos..], false);
    lines.finish()
}

#[derive(Default)]
struct LineBuilder {
    done: String,
    current: String,
    touched: bool,
}

impl LineBuilder {
    fn touch(&mut self) {
        self.touched = true;
    }

    fn last_char(&self) -> Option<char> {
        self.current.chars().last().or_else(|| self.done.chars().last())
    }

    fn push(&mut self, s: &str, touched: bool) {
        for piece in s.split_inclusive('\n') {
            self.touched |= touched;
            if let Some(line) = piece.strip_suffix('\n') {
                self.current.push_str(line);
                self.end_line(true);
            } else {
                self.current.push_str(piece);
            }
        }
    }

    fn end_line(&mut self, newline: bool) {
        let line = std::mem::take(&mut self.current);
        if self.touched {
            let trimmed = line.trim_end();
            if !trimmed.is_empty() {
                self.done.push_str(trimmed);
                if newline {
                    self.done.push('\n');
                }
            }
        } else {
            self.done.push_str(&line);
            if newline {
                self.done.push('\n');
            }
        }
        self.touched = false;
    }

    fn finish(mut self) -> String {
        self.end_line(false);
        self.done
    }
}

/// Rewrites every `;` line comment as a `/* */` comment on the same line.
/// The comment body keeps its text; `*/` inside it is broken up so the new
/// comment cannot end early.
pub fn normalize_comments(text: &str) -> String {
    let tokens = lex(text);
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for token in tokens.iter().filter(|t| t.kind == TokenKind::LineComment) {
        out.push_str(&text[pos..token.span.start]);
        let body = token.text.trim_start_matches(';').trim_end().replace("*/", "* /");
        out.push_str("/*");
        if !body.starts_with(char::is_whitespace) && !body.is_empty() {
            out.push(' ');
        }
        out.push_str(&body);
        out.push_str(" */");
        pos = token.span.end;
    }
    out.push_str(&text[pos..]);
    out
}

/// Removes every comment, leaving code and line layout otherwise intact.
pub fn strip_comments(code: &str) -> String {
    let tokens = lex(code);
    let edits = tokens
        .iter()
        .filter(|t| t.kind.is_comment())
        .map(|t| Edit::Remove(t.span.start, t.span.end))
        .collect();
    apply_edits(code, edits)
}
