use serde::Serialize;

use crate::model::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Identifier,
    Number,
    String,
    LineComment,
    BlockComment,
    OpenDelim,
    CloseDelim,
    QuoteMark,
    KeywordArg,
    Operator,
    Punct,
    /// String literal with no closing quote. Covers the rest of its line.
    UnterminatedString,
    /// Block comment with no closing `*/`. Covers the rest of the input.
    UnterminatedComment,
}

impl TokenKind {
    pub fn is_comment(self) -> bool {
        matches!(
            self,
            TokenKind::LineComment | TokenKind::BlockComment | TokenKind::UnterminatedComment
        )
    }

    pub fn is_error(self) -> bool {
        matches!(
            self,
            TokenKind::UnterminatedString | TokenKind::UnterminatedComment
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub span: Span,
    /// Zero-based line of the first byte.
    pub line: usize,
}

impl Token<'_> {
    pub fn is_open(&self, delim: char) -> bool {
        self.kind == TokenKind::OpenDelim && self.text.starts_with(delim)
    }

    /// Zero-based line of the last byte.
    pub fn end_line(&self) -> usize {
        self.line + self.text.bytes().filter(|&b| b == b'\n').count()
    }
}

/// Two-character operators, checked before single characters.
const OPERATORS_2: [&str; 12] = [
    "~>", "->", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "**", "<<",
];
const OPERATORS_1: &[u8] = b"=+-*/<>!&|:^%";

pub fn matching_close(open: char) -> char {
    match open {
        '(' => ')',
        '[' => ']',
        '{' => '}',
        other => other,
    }
}

/// Splits SKILL source into tokens. Whitespace is not tokenized; every
/// other byte belongs to exactly one token, so the gaps between tokens are
/// always whitespace and the input can be rebuilt from the token spans.
///
/// Malformed regions never abort lexing. An unterminated string becomes an
/// error token running to the end of its line and lexing resumes on the
/// next line; an unterminated block comment runs to the end of input.
pub fn lex(text: &str) -> Vec<Token<'_>> {
    Lexer {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        line: 0,
    }
    .run()
}

struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn run(mut self) -> Vec<Token<'a>> {
        let mut tokens = Vec::new();
        while let Some(token) = self.next_token() {
            tokens.push(token);
        }
        tokens
    }

    fn peek(&self, offset: usize) -> Option<u8> {
        self.bytes.get(self.pos + offset).copied()
    }

    fn emit(&mut self, kind: TokenKind, start: usize) -> Token<'a> {
        let token = Token {
            kind,
            text: &self.text[start..self.pos],
            span: Span::new(start, self.pos),
            line: self.line,
        };
        self.line = token.end_line();
        token
    }

    fn line_end(&self, from: usize) -> usize {
        self.bytes[from..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(self.bytes.len(), |p| from + p)
    }

    fn next_token(&mut self) -> Option<Token<'a>> {
        while let Some(b) = self.peek(0).filter(|b| b.is_ascii_whitespace()) {
            if b == b'\n' {
                self.line += 1;
            }
            self.pos += 1;
        }
        let start = self.pos;
        let b = self.peek(0)?;
        let kind = match b {
            b';' => {
                self.pos = self.line_end(start);
                TokenKind::LineComment
            }
            b'/' if self.peek(1) == Some(b'*') => match self.text[start + 2..].find("*/") {
                Some(rel) => {
                    self.pos = start + 2 + rel + 2;
                    TokenKind::BlockComment
                }
                None => {
                    self.pos = self.bytes.len();
                    TokenKind::UnterminatedComment
                }
            },
            b'"' => self.string(start),
            b'(' | b'[' | b'{' => {
                self.pos += 1;
                TokenKind::OpenDelim
            }
            b')' | b']' | b'}' => {
                self.pos += 1;
                TokenKind::CloseDelim
            }
            b'\'' | b'`' => {
                self.pos += 1;
                TokenKind::QuoteMark
            }
            b'?' if self.peek(1).is_some_and(is_ident_start) => {
                self.pos += 1;
                self.eat_ident_rest();
                TokenKind::KeywordArg
            }
            b if b.is_ascii_digit() => {
                self.number();
                TokenKind::Number
            }
            b if is_ident_start(b) => {
                self.pos += 1;
                self.eat_ident_rest();
                TokenKind::Identifier
            }
            _ => {
                let two = self.text.get(start..start + 2);
                if two.is_some_and(|t| OPERATORS_2.contains(&t)) {
                    self.pos += 2;
                    TokenKind::Operator
                } else if OPERATORS_1.contains(&b) {
                    self.pos += 1;
                    TokenKind::Operator
                } else {
                    // Any other character, including non-ASCII ones, is a
                    // single punctuation token.
                    let ch = self.text[start..].chars().next().expect("non-empty");
                    self.pos += ch.len_utf8();
                    TokenKind::Punct
                }
            }
        };
        Some(self.emit(kind, start))
    }

    fn string(&mut self, start: usize) -> TokenKind {
        let mut i = start + 1;
        while i < self.bytes.len() {
            match self.bytes[i] {
                b'\\' => i += 2,
                b'"' => {
                    self.pos = i + 1;
                    return TokenKind::String;
                }
                _ => i += 1,
            }
        }
        self.pos = self.line_end(start);
        TokenKind::UnterminatedString
    }

    fn eat_ident_rest(&mut self) {
        while self.peek(0).is_some_and(is_ident_continue) {
            self.pos += 1;
        }
    }

    fn number(&mut self) {
        while self.peek(0).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek(0) == Some(b'.') && self.peek(1).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
            while self.peek(0).is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(0), Some(b'e' | b'E')) {
            let sign = usize::from(matches!(self.peek(1), Some(b'+' | b'-')));
            if self.peek(1 + sign).is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1 + sign;
                while self.peek(0).is_some_and(|b| b.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        // Scale suffixes (`1u`, `10n`) and hex digits stay with the number.
        while self.peek(0).is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_') {
            self.pos += 1;
        }
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Rebuilds the source from tokens, filling gaps from `text`. Used to check
/// that lexing is lossless.
pub fn reassemble(text: &str, tokens: &[Token<'_>]) -> Option<String> {
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for token in tokens {
        let gap = text.get(cursor..token.span.start)?;
        if !gap.bytes().all(|b| b.is_ascii_whitespace()) {
            return None;
        }
        out.push_str(gap);
        out.push_str(token.text);
        cursor = token.span.end;
    }
    let tail = text.get(cursor..)?;
    if !tail.bytes().all(|b| b.is_ascii_whitespace()) {
        return None;
    }
    out.push_str(tail);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use TokenKind::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        lex(text).into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn comment_then_assignment() {
        let tokens = lex("; hi\nx = 1");
        let got: Vec<_> = tokens.iter().map(|t| (t.kind, t.text)).collect();
        assert_eq!(
            got,
            vec![(LineComment, "; hi"), (Identifier, "x"), (Operator, "="), (Number, "1")]
        );
    }

    #[test]
    fn call_style_procedure() {
        assert_eq!(
            kinds("procedure(foo(a) a+1)"),
            vec![
                Identifier, OpenDelim, Identifier, OpenDelim, Identifier, CloseDelim, Identifier,
                Operator, Number, CloseDelim
            ]
        );
    }

    #[test]
    fn unterminated_block_comment_runs_to_end() {
        let tokens = lex("/* unterminated");
        assert_eq!(tokens.len(), 1);
        assert_eq!(tokens[0].kind, UnterminatedComment);
        assert_eq!(tokens[0].span, Span::new(0, 15));
    }

    #[test]
    fn unterminated_string_resumes_next_line() {
        let tokens = lex("x = \"oops\ny = 2");
        let got: Vec<_> = tokens.iter().map(|t| (t.kind, t.text)).collect();
        assert_eq!(
            got,
            vec![
                (Identifier, "x"),
                (Operator, "="),
                (UnterminatedString, "\"oops"),
                (Identifier, "y"),
                (Operator, "="),
                (Number, "2"),
            ]
        );
    }

    #[test]
    fn strings_may_span_lines_and_escape_quotes() {
        let tokens = lex("\"a\\\"b\nc\" d");
        assert_eq!(tokens[0].kind, String);
        assert_eq!(tokens[0].text, "\"a\\\"b\nc\"");
        assert_eq!(tokens[1].text, "d");
    }

    #[test]
    fn semicolon_in_string_is_not_a_comment() {
        assert_eq!(kinds("\"; not a comment\""), vec![String]);
    }

    #[test]
    fn skill_specific_tokens() {
        let tokens = lex("cv~>shapes 'metal1 ?width 0.5u x->y");
        let got: Vec<_> = tokens.iter().map(|t| (t.kind, t.text)).collect();
        assert_eq!(
            got,
            vec![
                (Identifier, "cv"),
                (Operator, "~>"),
                (Identifier, "shapes"),
                (QuoteMark, "'"),
                (Identifier, "metal1"),
                (KeywordArg, "?width"),
                (Number, "0.5u"),
                (Identifier, "x"),
                (Operator, "->"),
                (Identifier, "y"),
            ]
        );
    }

    #[test]
    fn numbers_with_exponents() {
        let tokens = lex("1.5e-3 2E4 3.x");
        let got: Vec<_> = tokens.iter().map(|t| t.text).collect();
        assert_eq!(got, vec!["1.5e-3", "2E4", "3", ".", "x"]);
    }

    #[test]
    fn non_ascii_is_one_punct_per_char() {
        let tokens = lex("a é b");
        assert_eq!(tokens[1].kind, Punct);
        assert_eq!(tokens[1].text, "é");
    }

    #[test]
    fn line_numbers() {
        let tokens = lex("a\n/* x\ny */ b\n\nc");
        let lines: Vec<_> = tokens.iter().map(|t| (t.line, t.end_line())).collect();
        assert_eq!(lines, vec![(0, 0), (1, 2), (2, 2), (4, 4)]);
    }

    #[test]
    fn empty_input() {
        assert!(lex("").is_empty());
        assert!(lex(" \n\t ").is_empty());
    }

    proptest! {
        #[test]
        fn lossless(text in "[ -~\t\n]{0,200}") {
            let tokens = lex(&text);
            prop_assert_eq!(reassemble(&text, &tokens), Some(text.clone()));
        }

        #[test]
        fn lossless_on_skill_like_text(
            parts in proptest::collection::vec(
                prop_oneof![
                    Just("procedure("), Just("foo(a b)"), Just(" "), Just("\n"), Just("; c\n"),
                    Just("/* x */"), Just("\"s;\""), Just("\"open"), Just("/*"), Just(")"),
                    Just("x~>y"), Just("'sym"), Just("?k"), Just("1.0e3"), Just("é"),
                ],
                0..40,
            )
        ) {
            let text: std::string::String = parts.concat();
            let tokens = lex(&text);
            prop_assert_eq!(reassemble(&text, &tokens), Some(text.clone()));
            prop_assert_eq!(lex(&text), tokens);
        }
    }
}
