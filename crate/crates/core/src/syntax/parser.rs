use serde::Serialize;

use super::lexer::{matching_close, Token, TokenKind};
use crate::model::Span;

/// Keywords whose call introduces a procedure definition.
pub const DEFINITION_KEYWORDS: [&str; 4] = ["procedure", "defun", "globalProc", "pcDefinePCell"];

/// Control constructs and the number of leading header arguments that are
/// not part of the construct body.
const CONSTRUCTS: [(&str, usize); 18] = [
    ("foreach", 2),
    ("forall", 2),
    ("setof", 2),
    ("exists", 2),
    ("for", 3),
    ("while", 1),
    ("if", 1),
    ("when", 1),
    ("unless", 1),
    ("let", 1),
    ("prog", 1),
    ("progn", 0),
    ("case", 1),
    ("caseq", 1),
    ("cond", 0),
    ("unwindProtect", 0),
    ("errset", 0),
    ("dbForEach", 2),
];

/// Looping constructs, a subset of the above.
pub const LOOP_KEYWORDS: [&str; 6] = ["foreach", "forall", "for", "while", "setof", "exists"];

const MAPPING_FOREACH: [&str; 5] = ["mapcar", "mapc", "mapcan", "maplist", "map"];

pub fn construct_header_len(keyword: &str) -> Option<usize> {
    CONSTRUCTS.iter().find(|(k, _)| *k == keyword).map(|(_, n)| *n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    ProcedureDef,
    Statement,
    Construct,
    CommentBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    /// An open delimiter never closed.
    Unclosed,
    /// A close delimiter with no matching open.
    UnexpectedClose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SyntaxIssue {
    pub kind: IssueKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Form {
    pub kind: FormKind,
    pub span: Span,
    /// Zero-based first and last line of the form.
    pub lines: (usize, usize),
    /// Definition or construct keyword heading the form.
    pub keyword: Option<String>,
    pub name: Option<String>,
    pub params: Option<Vec<String>>,
    /// For procedure definitions: keyword through the parameter list.
    pub header_span: Option<Span>,
    pub body_span: Option<Span>,
    pub children: Vec<Form>,
    /// Delimiter problems inside a top-level form.
    pub issues: Vec<SyntaxIssue>,
    /// A stray close delimiter parsed as a statement of its own.
    pub degenerate: bool,
}

impl Form {
    fn new(kind: FormKind, span: Span, lines: (usize, usize)) -> Self {
        Form {
            kind,
            span,
            lines,
            keyword: None,
            name: None,
            params: None,
            header_span: None,
            body_span: None,
            children: Vec::new(),
            issues: Vec::new(),
            degenerate: false,
        }
    }

    /// Children that are code rather than comments.
    pub fn code_children(&self) -> impl Iterator<Item = &Form> {
        self.children
            .iter()
            .filter(|c| c.kind != FormKind::CommentBlock)
    }

    /// Visits this form and all descendants in source order.
    pub fn walk<'f>(&'f self, visit: &mut impl FnMut(&'f Form)) {
        visit(self);
        for child in &self.children {
            child.walk(visit);
        }
    }
}

/// Number of blank lines between a form ending on `end_line` and one
/// starting on `start_line`.
pub fn blank_lines_between(end_line: usize, start_line: usize) -> usize {
    start_line.saturating_sub(end_line).saturating_sub(1)
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(usize),
    /// Close delimiter without a matching open.
    Stray(usize),
    Group(Group),
}

#[derive(Debug, Clone)]
struct Group {
    open: usize,
    close: Option<usize>,
    children: Vec<Node>,
}

impl Node {
    fn first_token(&self) -> usize {
        match self {
            Node::Leaf(i) | Node::Stray(i) => *i,
            Node::Group(g) => g.open,
        }
    }

    fn last_token(&self) -> usize {
        match self {
            Node::Leaf(i) | Node::Stray(i) => *i,
            Node::Group(g) => g
                .close
                .or_else(|| g.children.last().map(Node::last_token))
                .unwrap_or(g.open),
        }
    }
}

fn build_tree(tokens: &[Token<'_>]) -> Vec<Node> {
    let mut stack: Vec<Group> = Vec::new();
    let mut top: Vec<Node> = Vec::new();

    fn push(stack: &mut [Group], top: &mut Vec<Node>, node: Node) {
        match stack.last_mut() {
            Some(g) => g.children.push(node),
            None => top.push(node),
        }
    }

    for (i, token) in tokens.iter().enumerate() {
        match token.kind {
            TokenKind::OpenDelim => stack.push(Group {
                open: i,
                close: None,
                children: Vec::new(),
            }),
            TokenKind::CloseDelim => {
                let close_ch = token.text.chars().next().expect("non-empty");
                let matches = |g: &Group| {
                    let open_ch = tokens[g.open].text.chars().next().expect("non-empty");
                    matching_close(open_ch) == close_ch
                };
                match stack.iter().rposition(matches) {
                    Some(depth) => {
                        // Groups opened after the match are left unclosed.
                        while stack.len() > depth + 1 {
                            let g = stack.pop().expect("depth checked");
                            push(&mut stack, &mut top, Node::Group(g));
                        }
                        let mut g = stack.pop().expect("depth checked");
                        g.close = Some(i);
                        push(&mut stack, &mut top, Node::Group(g));
                    }
                    None => push(&mut stack, &mut top, Node::Stray(i)),
                }
            }
            _ => push(&mut stack, &mut top, Node::Leaf(i)),
        }
    }
    while let Some(g) = stack.pop() {
        push(&mut stack, &mut top, Node::Group(g));
    }
    top
}

/// Parses a token stream into top-level forms. Never fails: unbalanced
/// delimiters are recorded as issues on the enclosing top-level form, and a
/// stray close delimiter becomes a degenerate statement of its own.
pub fn parse(tokens: &[Token<'_>]) -> Vec<Form> {
    parse_with(tokens, &DEFINITION_KEYWORDS)
}

pub fn parse_with(tokens: &[Token<'_>], definition_keywords: &[&str]) -> Vec<Form> {
    let tree = build_tree(tokens);
    let parser = Parser {
        tokens,
        definition_keywords,
    };
    parser.sequence(&tree, 0)
}

struct Parser<'t, 'a> {
    tokens: &'t [Token<'a>],
    definition_keywords: &'t [&'t str],
}

impl Parser<'_, '_> {
    fn token(&self, i: usize) -> &Token<'_> {
        &self.tokens[i]
    }

    fn leaf_kind(&self, node: &Node) -> Option<TokenKind> {
        match node {
            Node::Leaf(i) => Some(self.tokens[*i].kind),
            _ => None,
        }
    }

    fn is_comment(&self, node: &Node) -> bool {
        self.leaf_kind(node).is_some_and(TokenKind::is_comment)
    }

    fn span_of(&self, nodes: &[Node]) -> Span {
        let first = self.token(nodes[0].first_token()).span;
        let last = self.token(nodes[nodes.len() - 1].last_token()).span;
        Span::new(first.start, last.end)
    }

    fn lines_of(&self, nodes: &[Node]) -> (usize, usize) {
        (
            self.token(nodes[0].first_token()).line,
            self.token(nodes[nodes.len() - 1].last_token()).end_line(),
        )
    }

    /// A comment that shares its line with the preceding code token.
    fn is_trailing_comment(&self, idx: usize) -> bool {
        idx > 0 && {
            let prev = self.token(idx - 1);
            !prev.kind.is_comment() && prev.end_line() == self.token(idx).line
        }
    }

    fn sequence(&self, nodes: &[Node], depth: usize) -> Vec<Form> {
        let mut forms = Vec::new();
        let mut i = 0;
        while i < nodes.len() {
            let node = &nodes[i];
            if self.is_comment(node) {
                let idx = node.first_token();
                if self.is_trailing_comment(idx) {
                    i += 1;
                    continue;
                }
                let mut j = i;
                while j + 1 < nodes.len() && self.is_comment(&nodes[j + 1]) {
                    let prev_end = self.token(nodes[j].last_token()).end_line();
                    let next_start = self.token(nodes[j + 1].first_token()).line;
                    if blank_lines_between(prev_end, next_start) > 1 {
                        break;
                    }
                    j += 1;
                }
                let range = &nodes[i..=j];
                forms.push(Form::new(
                    FormKind::CommentBlock,
                    self.span_of(range),
                    self.lines_of(range),
                ));
                i = j + 1;
                continue;
            }
            if let Node::Stray(idx) = node {
                let token = self.token(*idx);
                let mut form = Form::new(
                    FormKind::Statement,
                    token.span,
                    (token.line, token.end_line()),
                );
                form.degenerate = true;
                form.issues.push(SyntaxIssue {
                    kind: IssueKind::UnexpectedClose,
                    span: token.span,
                });
                forms.push(form);
                i += 1;
                continue;
            }
            let end = self.statement_end(nodes, i);
            let mut form = self.classify(&nodes[i..end], depth);
            if depth == 0 {
                form.issues = self.collect_issues(&nodes[i..end]);
            }
            forms.push(form);
            i = end;
        }
        forms
    }

    fn collect_issues(&self, nodes: &[Node]) -> Vec<SyntaxIssue> {
        let mut issues = Vec::new();
        let mut stack: Vec<&Node> = nodes.iter().rev().collect();
        while let Some(node) = stack.pop() {
            match node {
                Node::Leaf(_) => {}
                Node::Stray(i) => issues.push(SyntaxIssue {
                    kind: IssueKind::UnexpectedClose,
                    span: self.token(*i).span,
                }),
                Node::Group(g) => {
                    if g.close.is_none() {
                        issues.push(SyntaxIssue {
                            kind: IssueKind::Unclosed,
                            span: self.token(g.open).span,
                        });
                    }
                    stack.extend(g.children.iter().rev());
                }
            }
        }
        issues.sort_by_key(|issue| issue.span);
        issues
    }

    fn is_adjacent_group(&self, left: &Node, right: &Node, delims: &[char]) -> bool {
        match right {
            Node::Group(g) => {
                let open = self.token(g.open);
                delims.iter().any(|d| open.is_open(*d))
                    && self.token(left.last_token()).span.end == open.span.start
            }
            _ => false,
        }
    }

    fn is_prefix_operator(&self, node: &Node) -> bool {
        match node {
            Node::Leaf(i) => {
                let t = self.token(*i);
                t.kind == TokenKind::QuoteMark
                    || (t.kind == TokenKind::Operator && matches!(t.text, "-" | "+" | "!"))
            }
            _ => false,
        }
    }

    fn is_binary_operator(&self, node: &Node) -> bool {
        match node {
            Node::Leaf(i) => {
                let t = self.token(*i);
                t.kind == TokenKind::Operator && t.text != "!"
            }
            _ => false,
        }
    }

    /// One operand: prefix operators, a primary, and adjacent call or index
    /// groups.
    fn operand_end(&self, nodes: &[Node], mut i: usize) -> usize {
        while i < nodes.len() && self.is_prefix_operator(&nodes[i]) {
            i += 1;
        }
        if i >= nodes.len() || matches!(nodes[i], Node::Stray(_)) {
            return i;
        }
        let is_ident = self.leaf_kind(&nodes[i]) == Some(TokenKind::Identifier);
        i += 1;
        if is_ident && i < nodes.len() && self.is_adjacent_group(&nodes[i - 1], &nodes[i], &['(']) {
            i += 1;
        }
        while i < nodes.len() && self.is_adjacent_group(&nodes[i - 1], &nodes[i], &['[']) {
            i += 1;
        }
        i
    }

    fn statement_end(&self, nodes: &[Node], start: usize) -> usize {
        let mut i = self.operand_end(nodes, start).max(start + 1);
        while i < nodes.len() && self.is_binary_operator(&nodes[i]) {
            let mut j = i + 1;
            while j < nodes.len() && self.is_comment(&nodes[j]) {
                j += 1;
            }
            if j >= nodes.len() || matches!(nodes[j], Node::Stray(_)) {
                return i + 1;
            }
            i = self.operand_end(nodes, j).max(j + 1);
        }
        i
    }

    /// Head keyword and argument nodes of a call-style `kw(...)` or
    /// Lisp-style `(kw ...)` form.
    fn head_and_args<'n>(&self, nodes: &'n [Node]) -> Option<(&str, &'n [Node])> {
        match nodes {
            [Node::Leaf(i), group @ Node::Group(g)]
                if self.token(*i).kind == TokenKind::Identifier
                    && self.is_adjacent_group(&nodes[0], group, &['(']) =>
            {
                Some((self.token(*i).text, &g.children[..]))
            }
            [Node::Group(g)] if self.token(g.open).is_open('(') => {
                let first = g.children.iter().position(|n| !self.is_comment(n))?;
                match &g.children[first] {
                    Node::Leaf(i) if self.token(*i).kind == TokenKind::Identifier => {
                        Some((self.token(*i).text, &g.children[first + 1..]))
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn classify(&self, nodes: &[Node], depth: usize) -> Form {
        let span = self.span_of(nodes);
        let lines = self.lines_of(nodes);
        if let Some((head, args)) = self.head_and_args(nodes) {
            if self.definition_keywords.contains(&head) {
                if let Some(form) = self.procedure(head, args, span, lines, depth) {
                    return form;
                }
            } else if let Some(header_len) = construct_header_len(head) {
                return self.construct(head, header_len, args, span, lines, depth);
            }
        }
        Form::new(FormKind::Statement, span, lines)
    }

    fn construct(
        &self,
        head: &str,
        mut header_len: usize,
        args: &[Node],
        span: Span,
        lines: (usize, usize),
        depth: usize,
    ) -> Form {
        let mut children = self.sequence(args, depth + 1);
        if head == "foreach" {
            let first_code = children.iter().find(|c| c.kind != FormKind::CommentBlock);
            if let Some(first) = first_code {
                let text = self.token_text_at(first.span.start);
                if MAPPING_FOREACH.contains(&text) && first.span.len() == text.len() {
                    header_len += 1;
                }
            }
        }
        let mut skipped = 0;
        children.retain(|c| {
            if skipped < header_len {
                if c.kind != FormKind::CommentBlock {
                    skipped += 1;
                }
                return false;
            }
            true
        });
        if head == "if" {
            children.retain(|c| {
                !(c.kind == FormKind::Statement
                    && matches!(self.token_text_at(c.span.start), "then" | "else")
                    && c.span.len() == 4)
            });
        }
        let mut form = Form::new(FormKind::Construct, span, lines);
        form.keyword = Some(head.to_string());
        form.body_span = match (children.first(), children.last()) {
            (Some(first), Some(last)) => Some(Span::new(first.span.start, last.span.end)),
            _ => None,
        };
        form.children = children;
        form
    }

    fn token_text_at(&self, offset: usize) -> &str {
        self.tokens
            .binary_search_by_key(&offset, |t| t.span.start)
            .map(|i| self.tokens[i].text)
            .unwrap_or("")
    }

    fn procedure(
        &self,
        head: &str,
        args: &[Node],
        span: Span,
        lines: (usize, usize),
        depth: usize,
    ) -> Option<Form> {
        let code: Vec<usize> = (0..args.len()).filter(|&i| !self.is_comment(&args[i])).collect();
        let first = *code.first()?;

        let (name, params, header_end_node) = if head == "pcDefinePCell" {
            // pcDefinePCell(list(lib cell view) ((param default) ...) body)
            let target_end = self.operand_end(args, first);
            let params_idx = (target_end..args.len()).find(|&i| !self.is_comment(&args[i]))?;
            let Node::Group(params_group) = &args[params_idx] else {
                return None;
            };
            let strings = self.strings_in(&args[first..target_end]);
            let name = strings
                .get(1)
                .or(strings.first())
                .map(|s| s.trim_matches('"').to_string())
                .unwrap_or_else(|| head.to_string());
            (name, self.params_from(&params_group.children), params_idx)
        } else {
            match &args[first] {
                Node::Leaf(i) if self.token(*i).kind == TokenKind::Identifier => {
                    let params_idx = code.get(1).copied()?;
                    let Node::Group(g) = &args[params_idx] else {
                        return None;
                    };
                    if !self.token(g.open).is_open('(') {
                        return None;
                    }
                    (
                        self.token(*i).text.to_string(),
                        self.params_from(&g.children),
                        params_idx,
                    )
                }
                // Lisp style: (procedure (name a b) body)
                Node::Group(g) if self.token(g.open).is_open('(') => {
                    let mut ids = self.params_from(&g.children);
                    if ids.is_empty() {
                        return None;
                    }
                    let name = ids.remove(0);
                    (name, ids, first)
                }
                _ => return None,
            }
        };

        let header_end = self.token(args[header_end_node].last_token()).span.end;
        let body_nodes = &args[header_end_node + 1..];
        let children = self.sequence(body_nodes, depth + 1);
        let body_span = if body_nodes.is_empty() {
            Span::new(header_end, header_end)
        } else {
            self.span_of(body_nodes)
        };

        let mut form = Form::new(FormKind::ProcedureDef, span, lines);
        form.keyword = Some(head.to_string());
        form.name = Some(name);
        form.params = Some(params);
        form.header_span = Some(Span::new(span.start, header_end));
        form.body_span = Some(body_span);
        form.children = children;
        Some(form)
    }

    /// Identifiers of a parameter list. `@optional`-style markers are
    /// skipped and `(name default)` entries contribute their name.
    fn params_from(&self, nodes: &[Node]) -> Vec<String> {
        let mut out = Vec::new();
        let mut after_at = false;
        for node in nodes {
            match node {
                Node::Leaf(i) => {
                    let t = self.token(*i);
                    if t.kind == TokenKind::Identifier && !after_at {
                        out.push(t.text.to_string());
                    }
                    after_at = t.kind == TokenKind::Punct && t.text == "@";
                }
                Node::Group(g) => {
                    after_at = false;
                    if let Some(Node::Leaf(i)) = g.children.first() {
                        if self.token(*i).kind == TokenKind::Identifier {
                            out.push(self.token(*i).text.to_string());
                        }
                    }
                }
                Node::Stray(_) => after_at = false,
            }
        }
        out
    }

    fn strings_in(&self, nodes: &[Node]) -> Vec<&str> {
        let mut out = Vec::new();
        let mut stack: Vec<&Node> = nodes.iter().rev().collect();
        while let Some(node) = stack.pop() {
            match node {
                Node::Leaf(i) if self.token(*i).kind == TokenKind::String => {
                    out.push(self.token(*i).text)
                }
                Node::Group(g) => stack.extend(g.children.iter().rev()),
                _ => {}
            }
        }
        out
    }
}
