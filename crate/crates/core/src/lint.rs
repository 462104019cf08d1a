//! Static analysis for SKILL files: a pass/fail grade driven by syntax
//! errors and a 0-100 IQ score that also covers style and efficiency.
//!
//! Rules and their default deductions:
//!
//! | rule | class | deduction |
//! |---|---|---|
//! | `unbalanced-delimiters` | syntax | 40, once per file |
//! | `unterminated-string` | syntax | 40 |
//! | `unterminated-comment` | syntax | 40 |
//! | `empty-file` | syntax | 100 |
//! | `line-length` | style | 2, once per file |
//! | `mixed-indentation` | style | 2, once per file |
//! | `comma-space` | style | 1 |
//! | `shadowed-builtin` | style | 5 |
//! | `unused-local` | style | 3 |
//! | `append-in-loop` | efficiency | 5 |
//! | `repeated-subexpression` | efficiency | 3 |
//!
//! Line-based rules look at the file with comments stripped, and token
//! rules ignore comment tokens, so comments never change the score except
//! through an unterminated block comment.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Pair, SourceFile, Span};
use crate::preprocess::strip_comments;
use crate::syntax::{lex, parse, Form, FormKind, Token, TokenKind, LOOP_KEYWORDS};

/// Names of built-in functions that user code should not rebind.
pub const BUILTINS: &[&str] = &[
    "abs", "and", "append", "append1", "apply", "assoc", "car", "cadr", "cdr", "concat", "cons",
    "cos", "difference", "error", "eval", "exp", "fix", "float", "funcall", "get", "getq",
    "index", "lambda", "length", "list", "load", "log", "max", "member", "memq", "min", "nth",
    "not", "null", "or", "plus", "print", "printf", "println", "putprop", "quotient", "return",
    "reverse", "round", "set", "setq", "sin", "sort", "sprintf", "sqrt", "strcat", "strlen",
    "substring", "times", "type",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    UnbalancedDelimiters,
    UnterminatedString,
    UnterminatedComment,
    EmptyFile,
    LineLength,
    MixedIndentation,
    CommaSpace,
    ShadowedBuiltin,
    UnusedLocal,
    AppendInLoop,
    RepeatedSubexpression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleClass {
    Syntax,
    Style,
    Efficiency,
}

impl Rule {
    pub const ALL: [Rule; 11] = [
        Rule::UnbalancedDelimiters,
        Rule::UnterminatedString,
        Rule::UnterminatedComment,
        Rule::EmptyFile,
        Rule::LineLength,
        Rule::MixedIndentation,
        Rule::CommaSpace,
        Rule::ShadowedBuiltin,
        Rule::UnusedLocal,
        Rule::AppendInLoop,
        Rule::RepeatedSubexpression,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Rule::UnbalancedDelimiters => "unbalanced-delimiters",
            Rule::UnterminatedString => "unterminated-string",
            Rule::UnterminatedComment => "unterminated-comment",
            Rule::EmptyFile => "empty-file",
            Rule::LineLength => "line-length",
            Rule::MixedIndentation => "mixed-indentation",
            Rule::CommaSpace => "comma-space",
            Rule::ShadowedBuiltin => "shadowed-builtin",
            Rule::UnusedLocal => "unused-local",
            Rule::AppendInLoop => "append-in-loop",
            Rule::RepeatedSubexpression => "repeated-subexpression",
        }
    }

    pub fn class(self) -> RuleClass {
        match self {
            Rule::UnbalancedDelimiters
            | Rule::UnterminatedString
            | Rule::UnterminatedComment
            | Rule::EmptyFile => RuleClass::Syntax,
            Rule::AppendInLoop | Rule::RepeatedSubexpression => RuleClass::Efficiency,
            _ => RuleClass::Style,
        }
    }

    pub fn default_deduction(self) -> u32 {
        match self {
            Rule::UnbalancedDelimiters | Rule::UnterminatedString | Rule::UnterminatedComment => 40,
            Rule::EmptyFile => 100,
            Rule::LineLength | Rule::MixedIndentation => 2,
            Rule::CommaSpace => 1,
            Rule::ShadowedBuiltin | Rule::AppendInLoop => 5,
            Rule::UnusedLocal | Rule::RepeatedSubexpression => 3,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LintConfig {
    pub max_line_length: usize,
    /// Per-rule overrides of the default deductions.
    pub deductions: BTreeMap<Rule, u32>,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig {
            max_line_length: 120,
            deductions: BTreeMap::new(),
        }
    }
}

impl LintConfig {
    pub fn deduction(&self, rule: Rule) -> u32 {
        self.deductions
            .get(&rule)
            .copied()
            .unwrap_or_else(|| rule.default_deduction())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub rule_id: Rule,
    pub span: Span,
    pub deduction: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintReport {
    pub grade: Grade,
    pub iq: u32,
    pub findings: Vec<Finding>,
}

impl LintReport {
    fn from_findings(mut findings: Vec<Finding>) -> Self {
        findings.sort_by(|a, b| (a.span, a.rule_id).cmp(&(b.span, b.rule_id)));
        let total: u64 = findings.iter().map(|f| u64::from(f.deduction)).sum();
        let iq = 100u64.saturating_sub(total) as u32;
        let grade = if findings.iter().any(|f| f.rule_id.class() == RuleClass::Syntax) {
            Grade::Fail
        } else {
            Grade::Pass
        };
        LintReport { grade, iq, findings }
    }

    pub fn passed(&self) -> bool {
        self.grade == Grade::Pass
    }
}

impl fmt::Display for LintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let grade = match self.grade {
            Grade::Pass => "pass",
            Grade::Fail => "fail",
        };
        writeln!(f, "grade {grade}, iq {}", self.iq)?;
        for finding in &self.findings {
            writeln!(
                f,
                "  {} -{} {}: {}",
                finding.span, finding.deduction, finding.rule_id, finding.message
            )?;
        }
        Ok(())
    }
}

pub fn lint_file(text: &str) -> LintReport {
    lint_file_with(text, &LintConfig::default())
}

pub fn lint_file_with(text: &str, config: &LintConfig) -> LintReport {
    let mut linter = Linter {
        config,
        findings: Vec::new(),
    };
    if text.trim().is_empty() {
        linter.add(Rule::EmptyFile, Span::new(0, text.len()), "file has no content".into());
        return LintReport::from_findings(linter.findings);
    }
    let tokens = lex(text);
    let forms = parse(&tokens);
    let code: Vec<Token<'_>> = tokens.iter().copied().filter(|t| !t.kind.is_comment()).collect();

    linter.error_tokens(&tokens);
    linter.delimiters(&forms);
    linter.lines(text, &tokens);
    linter.commas(&tokens);
    let closes = match_delimiters(&code);
    linter.bindings(&forms, &code, &closes);
    linter.appends_in_loops(&forms, &code, &closes);
    linter.repeated_subexpressions(&forms, &code, &closes);
    LintReport::from_findings(linter.findings)
}

/// Change in IQ when the pair's output in `file` is replaced by
/// `prediction`.
pub fn delta_liq(pair: &Pair, prediction: &str, file: &SourceFile) -> Result<i64> {
    delta_liq_with(pair, prediction, file, &LintConfig::default())
}

pub fn delta_liq_with(pair: &Pair, prediction: &str, file: &SourceFile, config: &LintConfig) -> Result<i64> {
    if pair.file_id != file.id {
        return Err(Error::InvalidInput(format!(
            "pair {} belongs to file {}, not {}",
            pair.id, pair.file_id, file.id
        )));
    }
    pair.output_span.slice(&file.text)?;
    let span = pair.output_span;
    let replaced = format!("{}{}{}", &file.text[..span.start], prediction, &file.text[span.end..]);
    let before = match &file.lint {
        Some(report) if config == &LintConfig::default() => report.iq,
        _ => lint_file_with(&file.text, config).iq,
    };
    let after = lint_file_with(&replaced, config).iq;
    Ok(i64::from(after) - i64::from(before))
}

struct Linter<'c> {
    config: &'c LintConfig,
    findings: Vec<Finding>,
}

/// For each open delimiter among `code`, the index of its matching close.
fn match_delimiters(code: &[Token<'_>]) -> Vec<Option<usize>> {
    let mut closes = vec![None; code.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, t) in code.iter().enumerate() {
        match t.kind {
            TokenKind::OpenDelim => stack.push(i),
            TokenKind::CloseDelim => {
                let close = t.text.chars().next().expect("non-empty");
                let open_ch = |j: usize| code[j].text.chars().next().expect("non-empty");
                if let Some(pos) = stack
                    .iter()
                    .rposition(|&j| crate::syntax::matching_close(open_ch(j)) == close)
                {
                    closes[stack[pos]] = Some(i);
                    stack.truncate(pos);
                }
            }
            _ => {}
        }
    }
    closes
}

fn code_range(code: &[Token<'_>], span: Span) -> std::ops::Range<usize> {
    let start = code.partition_point(|t| t.span.start < span.start);
    let end = code.partition_point(|t| t.span.start < span.end);
    start..end
}

fn is_call_at(code: &[Token<'_>], i: usize) -> bool {
    code[i].kind == TokenKind::Identifier
        && code
            .get(i + 1)
            .is_some_and(|n| n.is_open('(') && n.span.start == code[i].span.end)
}

impl Linter<'_> {
    fn add(&mut self, rule: Rule, span: Span, message: String) {
        let deduction = self.config.deduction(rule);
        self.findings.push(Finding {
            rule_id: rule,
            span,
            deduction,
            message,
        });
    }

    fn error_tokens(&mut self, tokens: &[Token<'_>]) {
        for t in tokens {
            match t.kind {
                TokenKind::UnterminatedString => {
                    self.add(Rule::UnterminatedString, t.span, "string literal is never closed".into())
                }
                TokenKind::UnterminatedComment => {
                    self.add(Rule::UnterminatedComment, t.span, "block comment is never closed".into())
                }
                _ => {}
            }
        }
    }

    fn delimiters(&mut self, forms: &[Form]) {
        let issues: Vec<_> = forms.iter().flat_map(|f| f.issues.iter()).collect();
        if let Some(first) = issues.iter().min_by_key(|i| i.span) {
            self.add(
                Rule::UnbalancedDelimiters,
                first.span,
                format!("{} unbalanced delimiter(s)", issues.len()),
            );
        }
    }

    /// Line rules run over the comment-free text; findings point at the
    /// matching line of the original.
    fn lines(&mut self, text: &str, tokens: &[Token<'_>]) {
        let stripped = strip_comments(text);
        let raw_lines = code_line_spans(text, tokens);
        let mut long = None;
        let mut mixed = None;
        for (idx, line) in stripped.lines().enumerate() {
            let raw = raw_lines.get(idx).copied().unwrap_or(Span::new(text.len(), text.len()));
            if long.is_none() && line.len() > self.config.max_line_length {
                long = Some((raw, line.len()));
            }
            let indent: &str = &line[..line.len() - line.trim_start().len()];
            if mixed.is_none() && indent.contains(' ') && indent.contains('\t') {
                mixed = Some(raw);
            }
        }
        if let Some((span, len)) = long {
            let max = self.config.max_line_length;
            self.add(Rule::LineLength, span, format!("line of {len} characters exceeds {max}"));
        }
        if let Some(span) = mixed {
            self.add(Rule::MixedIndentation, span, "indentation mixes tabs and spaces".into());
        }
    }

    fn commas(&mut self, tokens: &[Token<'_>]) {
        for (i, t) in tokens.iter().enumerate() {
            if t.kind != TokenKind::Punct || t.text != "," || i == 0 {
                continue;
            }
            let prev = &tokens[i - 1];
            let attached = prev.span.end == t.span.start
                && !prev.kind.is_comment()
                && !matches!(prev.kind, TokenKind::OpenDelim | TokenKind::QuoteMark);
            let glued = tokens.get(i + 1).is_some_and(|n| {
                n.span.start == t.span.end
                    && !n.kind.is_comment()
                    && !matches!(n.kind, TokenKind::CloseDelim)
            });
            if attached && glued {
                self.add(Rule::CommaSpace, t.span, "missing space after comma".into());
            }
        }
    }

    fn bindings(&mut self, forms: &[Form], code: &[Token<'_>], closes: &[Option<usize>]) {
        let builtins: HashSet<&str> = BUILTINS.iter().copied().collect();
        let mut visit = |form: &Form| match form.kind {
            FormKind::ProcedureDef => {
                let range = code_range(code, form.header_span.unwrap_or(form.span));
                let header = &code[range];
                let names = form.name.iter().chain(form.params.iter().flatten());
                for name in names {
                    if builtins.contains(name.as_str()) {
                        let span = header
                            .iter()
                            .find(|t| t.text == name)
                            .map_or(form.span, |t| t.span);
                        self.add(
                            Rule::ShadowedBuiltin,
                            span,
                            format!("`{name}` shadows a built-in function"),
                        );
                    }
                }
            }
            FormKind::Construct if matches!(form.keyword.as_deref(), Some("let" | "prog")) => {
                let range = code_range(code, form.span);
                for decl in local_declarations(code, range.clone(), closes) {
                    let name = code[decl].text;
                    if builtins.contains(name) {
                        self.add(
                            Rule::ShadowedBuiltin,
                            code[decl].span,
                            format!("`{name}` shadows a built-in function"),
                        );
                    }
                    let uses = code[range.clone()]
                        .iter()
                        .filter(|t| t.kind == TokenKind::Identifier && t.text == name)
                        .count();
                    if uses <= 1 {
                        self.add(
                            Rule::UnusedLocal,
                            code[decl].span,
                            format!("local `{name}` is never used"),
                        );
                    }
                }
            }
            _ => {}
        };
        for form in forms {
            form.walk(&mut visit);
        }
    }

    fn appends_in_loops(&mut self, forms: &[Form], code: &[Token<'_>], closes: &[Option<usize>]) {
        let mut flagged = HashSet::new();
        for form in forms {
            form.walk(&mut |f: &Form| {
                let is_loop = f.kind == FormKind::Construct
                    && f.keyword.as_deref().is_some_and(|k| LOOP_KEYWORDS.contains(&k));
                if !is_loop {
                    return;
                }
                for child in &f.children {
                    for i in code_range(code, child.span) {
                        let t = &code[i];
                        let lisp_head = i > 0 && code[i - 1].is_open('(') && !is_call_at(code, i - 1);
                        let is_call = is_call_at(code, i) && closes[i + 1].is_some();
                        if t.kind == TokenKind::Identifier && t.text == "append" && (is_call || lisp_head) {
                            flagged.insert(i);
                        }
                    }
                }
            });
        }
        let mut flagged: Vec<usize> = flagged.into_iter().collect();
        flagged.sort_unstable();
        for i in flagged {
            self.add(
                Rule::AppendInLoop,
                code[i].span,
                "`append` inside a loop copies the list on every iteration".into(),
            );
        }
    }

    fn repeated_subexpressions(&mut self, forms: &[Form], code: &[Token<'_>], closes: &[Option<usize>]) {
        for form in forms.iter().filter(|f| f.kind != FormKind::CommentBlock) {
            let range = code_range(code, form.span);
            let mut occurrences: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
            for i in range.clone() {
                let (start, open) = if is_call_at(code, i) {
                    (i, i + 1)
                } else if code[i].is_open('(')
                    && code.get(i + 1).is_some_and(|t| t.kind == TokenKind::Identifier)
                    && !(i > 0 && is_call_at(code, i - 1))
                {
                    (i, i)
                } else {
                    continue;
                };
                let Some(close) = closes[open].filter(|&c| c < range.end) else {
                    continue;
                };
                // Needs at least one argument: `f(x)` or `(f x)`.
                if close - start < 3 {
                    continue;
                }
                let key = code[start..=close]
                    .iter()
                    .map(|t| t.text)
                    .collect::<Vec<_>>()
                    .join(" ");
                occurrences.entry(key).or_default().push((start, close));
            }
            let mut repeated: Vec<(String, Vec<(usize, usize)>)> =
                occurrences.into_iter().filter(|(_, occ)| occ.len() >= 3).collect();
            repeated.sort_by(|a, b| {
                let len = |o: &Vec<(usize, usize)>| o[0].1 - o[0].0;
                len(&b.1).cmp(&len(&a.1)).then(a.1[0].cmp(&b.1[0]))
            });
            let mut reported: Vec<(usize, usize)> = Vec::new();
            for (key, occ) in repeated {
                // Occurrences inside an already reported expression go away
                // with it, so together they count once.
                let (covered, free): (Vec<&(usize, usize)>, Vec<_>) = occ
                    .iter()
                    .partition(|&&(s, e)| reported.iter().any(|&(rs, re)| rs <= s && e <= re));
                let count = free.len() + usize::from(!covered.is_empty());
                if count < 3 {
                    continue;
                }
                reported.extend(occ.iter().copied());
                let span = Span::new(code[occ[0].0].span.start, code[occ[0].1].span.end);
                self.add(
                    Rule::RepeatedSubexpression,
                    span,
                    format!("`{key}` is computed {count} times"),
                );
            }
        }
    }
}

/// Indices of the identifiers a `let`/`prog` construct declares.
fn local_declarations(
    code: &[Token<'_>],
    range: std::ops::Range<usize>,
    closes: &[Option<usize>],
) -> Vec<usize> {
    let toks = &code[range.clone()];
    let Some(kw) = toks
        .iter()
        .position(|t| t.kind == TokenKind::Identifier && matches!(t.text, "let" | "prog"))
    else {
        return Vec::new();
    };
    let kw = range.start + kw;
    // `let((a b) ...)` has the call paren between keyword and locals.
    let list = if is_call_at(code, kw) { kw + 2 } else { kw + 1 };
    if list >= range.end || !code[list].is_open('(') {
        return Vec::new();
    }
    let Some(close) = closes[list] else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut i = list + 1;
    while i < close {
        let t = &code[i];
        if t.kind == TokenKind::Identifier {
            out.push(i);
            i += 1;
        } else if t.is_open('(') {
            if code.get(i + 1).is_some_and(|n| n.kind == TokenKind::Identifier) {
                out.push(i + 1);
            }
            i = closes[i].map_or(close, |c| c + 1);
        } else {
            i += 1;
        }
    }
    out
}

/// Spans of the original lines that survive comment stripping, in order.
/// A line survives unless it holds comment text and nothing else.
fn code_line_spans(text: &str, tokens: &[Token<'_>]) -> Vec<Span> {
    let mut has_comment = Vec::new();
    let mut has_code = Vec::new();
    let mut starts = vec![0];
    for (i, b) in text.bytes().enumerate() {
        if b == b'\n' {
            starts.push(i + 1);
        }
    }
    has_comment.resize(starts.len(), false);
    has_code.resize(starts.len(), false);
    for t in tokens {
        let mut line = t.line;
        for piece in t.text.split('\n') {
            if line < starts.len() {
                if t.kind.is_comment() {
                    has_comment[line] = true;
                } else if !piece.trim().is_empty() {
                    has_code[line] = true;
                }
            }
            line += 1;
        }
    }
    (0..starts.len())
        .filter(|&l| !has_comment[l] || has_code[l])
        .map(|l| {
            let start = starts[l];
            let end = starts.get(l + 1).map_or(text.len(), |&s| s - 1);
            Span::new(start, end)
        })
        .collect()
}
