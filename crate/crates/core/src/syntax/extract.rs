use serde::Serialize;

use super::parser::{blank_lines_between, Form, FormKind};
use crate::model::Span;

/// Maximum blank lines allowed between a comment and the code it describes.
pub const ADJACENCY_BLANK_LINES: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcedureInfo {
    pub name: String,
    pub params: Vec<String>,
    pub def_span: Span,
    pub header_span: Span,
    pub body_span: Span,
    pub preceding_comment: Option<Span>,
    /// Statements of the body, in order.
    pub body_forms: Vec<Form>,
    /// Nesting depth; zero for top-level definitions.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommentBlockInfo {
    pub comment_span: Span,
    pub following_form: Option<Form>,
    pub depth: usize,
}

fn adjacent(prev: &Form, next: &Form) -> bool {
    blank_lines_between(prev.lines.1, next.lines.0) <= ADJACENCY_BLANK_LINES
}

/// Visits every sibling sequence (top level and each form's children) with
/// its nesting depth.
fn for_each_sequence<'f>(forms: &'f [Form], depth: usize, visit: &mut impl FnMut(&'f [Form], usize)) {
    visit(forms, depth);
    for form in forms {
        for_each_sequence(&form.children, depth + 1, visit);
    }
}

/// Every procedure definition, nested ones included, in source order.
pub fn extract_procedures(forms: &[Form]) -> Vec<ProcedureInfo> {
    let mut out = Vec::new();
    for_each_sequence(forms, 0, &mut |seq, depth| {
        for (i, form) in seq.iter().enumerate() {
            if form.kind != FormKind::ProcedureDef {
                continue;
            }
            let preceding_comment = i
                .checked_sub(1)
                .map(|j| &seq[j])
                .filter(|prev| prev.kind == FormKind::CommentBlock && adjacent(prev, form))
                .map(|prev| prev.span);
            out.push(ProcedureInfo {
                name: form.name.clone().unwrap_or_default(),
                params: form.params.clone().unwrap_or_default(),
                def_span: form.span,
                header_span: form.header_span.expect("procedure has header"),
                body_span: form.body_span.expect("procedure has body"),
                preceding_comment,
                body_forms: form.children.clone(),
                depth,
            });
        }
    });
    out.sort_by_key(|p| p.def_span);
    out
}

/// Every comment block with the statement or construct it directly
/// describes. Blocks followed by a definition get no following form.
pub fn extract_comment_blocks(forms: &[Form]) -> Vec<CommentBlockInfo> {
    let mut out = Vec::new();
    for_each_sequence(forms, 0, &mut |seq, depth| {
        for (i, form) in seq.iter().enumerate() {
            if form.kind != FormKind::CommentBlock {
                continue;
            }
            let following_form = seq
                .get(i + 1)
                .filter(|next| {
                    matches!(next.kind, FormKind::Statement | FormKind::Construct)
                        && !next.degenerate
                        && next.issues.is_empty()
                        && adjacent(form, next)
                })
                .cloned();
            out.push(CommentBlockInfo {
                comment_span: form.span,
                following_form,
                depth,
            });
        }
    });
    out.sort_by_key(|c| c.comment_span);
    out
}
