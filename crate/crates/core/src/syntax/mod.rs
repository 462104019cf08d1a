//! Lexing and structural parsing for the subset of SKILL the rest of the
//! toolkit relies on: both the Lisp and the algebraic call syntax,
//! definitions, control constructs and comments.

mod extract;
mod lexer;
mod parser;

pub use extract::{
    extract_comment_blocks, extract_procedures, CommentBlockInfo, ProcedureInfo,
    ADJACENCY_BLANK_LINES,
};
pub use lexer::{lex, matching_close, reassemble, Token, TokenKind};
pub use parser::{
    blank_lines_between, construct_header_len, parse, parse_with, Form, FormKind, IssueKind,
    SyntaxIssue, DEFINITION_KEYWORDS, LOOP_KEYWORDS,
};

/// Lexes and parses in one step.
pub fn parse_text(text: &str) -> Vec<Form> {
    parse(&lex(text))
}
