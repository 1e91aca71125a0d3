//! Error-tolerant structural parser.
//!
//! Works on the significant tokens of a [`TokenStream`]. Delimiters are
//! repaired first (stray closers dropped, unclosed openers closed at the end
//! of their enclosing scope) so the recursive descent below can treat every
//! `(`, `[` and `{` as a balanced group.

use crate::tokenizer::{Diagnostic, DiagnosticKind, TokenKind, TokenStream};

use super::{NodeType, SyntaxNode, SyntaxTree};

/// Keywords that may appear in the head of a declaration.
const DECL_KEYWORDS: &[&str] = &[
    "int", "long", "short", "char", "float", "double", "bool", "boolean", "byte", "void", "auto",
    "const", "static", "final", "unsigned", "signed", "volatile", "register", "extern", "mutable",
    "constexpr", "consteval", "constinit", "inline", "struct", "enum", "class", "typename",
    "public", "private", "protected", "transient", "virtual", "thread_local", "char8_t",
    "char16_t", "char32_t", "wchar_t", "explicit", "friend", "abstract", "native", "strictfp",
];

/// Keywords that open a statement even at file or class scope.
const STATEMENT_KEYWORDS: &[&str] = &[
    "if", "for", "while", "do", "switch", "return", "try", "throw", "break", "continue", "else",
    "goto",
];

const CLASS_KEYWORDS: &[&str] = &["class", "struct", "interface", "enum", "union"];

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
];

const BINARY_OPS: &[&str] = &[
    "+", "-", "*", "/", "%", "==", "!=", "<", ">", "<=", ">=", "&&", "||", "&", "|", "^", "<<",
    ">>", ">>>", ",",
];

const PREFIX_OPS: &[&str] = &["!", "~", "++", "--", "-", "+", "*", "&"];

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
struct PTok {
    kind: TokenKind,
    text: String,
    line: usize,
}

pub fn parse_syntax(stream: &TokenStream) -> SyntaxTree {
    let (toks, diagnostics) = repair(stream);
    let pair = match_pairs(&toks);
    let parser = Parser { toks: &toks, pair };
    let items = parser.decl_scope(0, toks.len());
    SyntaxTree::new(
        SyntaxNode::new(NodeType::TranslationUnit, items),
        diagnostics,
    )
}

fn closer_of(open: &str) -> &'static str {
    match open {
        "(" => ")",
        "[" => "]",
        _ => "}",
    }
}

fn opener_of(close: &str) -> &'static str {
    match close {
        ")" => "(",
        "]" => "[",
        _ => "{",
    }
}

fn is_opener(t: &PTok) -> bool {
    t.kind == TokenKind::Punctuation && matches!(t.text.as_str(), "(" | "[" | "{")
}

fn is_closer(t: &PTok) -> bool {
    t.kind == TokenKind::Punctuation && matches!(t.text.as_str(), ")" | "]" | "}")
}

/// Drops comments and whitespace and balances `()[]{}`.
fn repair(stream: &TokenStream) -> (Vec<PTok>, Vec<Diagnostic>) {
    let mut out: Vec<PTok> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let unmatched = |line: usize, column: usize, message: String| Diagnostic {
        kind: DiagnosticKind::UnmatchedDelimiter,
        line,
        column,
        message,
    };
    for tok in stream.significant() {
        let p = PTok {
            kind: tok.kind,
            text: tok.text.clone(),
            line: tok.line,
        };
        if is_opener(&p) {
            stack.push(out.len());
            out.push(p);
        } else if is_closer(&p) {
            let want = opener_of(&p.text);
            match stack.iter().rposition(|&i| out[i].text == want) {
                Some(pos) => {
                    while stack.len() > pos + 1 {
                        let i = stack.pop().unwrap();
                        diagnostics.push(unmatched(
                            tok.line,
                            tok.column,
                            format!("unclosed `{}` from line {}", out[i].text, out[i].line),
                        ));
                        out.push(PTok {
                            kind: TokenKind::Punctuation,
                            text: closer_of(&out[i].text).to_string(),
                            line: tok.line,
                        });
                    }
                    stack.pop();
                    out.push(p);
                }
                None => diagnostics.push(unmatched(
                    tok.line,
                    tok.column,
                    format!("stray `{}`", tok.text),
                )),
            }
        } else {
            out.push(p);
        }
    }
    let last_line = stream.line_count.max(1);
    while let Some(i) = stack.pop() {
        diagnostics.push(unmatched(
            last_line,
            1,
            format!("unclosed `{}` from line {}", out[i].text, out[i].line),
        ));
        out.push(PTok {
            kind: TokenKind::Punctuation,
            text: closer_of(&out[i].text).to_string(),
            line: last_line,
        });
    }
    (out, diagnostics)
}

fn match_pairs(toks: &[PTok]) -> Vec<usize> {
    let mut pair = vec![NONE; toks.len()];
    let mut stack = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if is_opener(t) {
            stack.push(i);
        } else if is_closer(t) {
            let open = stack.pop().expect("delimiters repaired");
            pair[open] = i;
            pair[i] = open;
        }
    }
    pair
}

fn node(kind: NodeType, children: Vec<SyntaxNode>) -> SyntaxNode {
    SyntaxNode::new(kind, children)
}

fn leaf(kind: NodeType) -> SyntaxNode {
    SyntaxNode::leaf(kind)
}

struct Parser<'t> {
    toks: &'t [PTok],
    pair: Vec<usize>,
}

impl Parser<'_> {
    fn is_p(&self, i: usize, text: &str) -> bool {
        self.toks
            .get(i)
            .is_some_and(|t| t.kind == TokenKind::Punctuation && t.text == text)
    }

    fn is_kw(&self, i: usize, text: &str) -> bool {
        self.toks
            .get(i)
            .is_some_and(|t| t.kind == TokenKind::Keyword && t.text == text)
    }

    fn is_include(&self, i: usize) -> bool {
        let t = &self.toks[i];
        t.kind == TokenKind::Punctuation && t.text.starts_with('#') && t.text.ends_with("include")
    }

    /// Index after the token or balanced group starting at `i`.
    fn next_top(&self, i: usize) -> usize {
        if is_opener(&self.toks[i]) {
            self.pair[i] + 1
        } else {
            i + 1
        }
    }

    /// Top-level positions in `lo..hi` (groups are visited by their opener).
    fn top_positions(&self, lo: usize, hi: usize) -> TopIter<'_, '_> {
        TopIter {
            parser: self,
            pos: lo,
            hi,
        }
    }

    fn find_top(&self, lo: usize, hi: usize, mut pred: impl FnMut(usize) -> bool) -> Option<usize> {
        self.top_positions(lo, hi).find(|&i| pred(i))
    }

    /// Segments of `lo..hi` separated by top-level commas.
    fn split_commas(&self, lo: usize, hi: usize) -> Vec<(usize, usize)> {
        let mut segments = Vec::new();
        let mut start = lo;
        for i in self.top_positions(lo, hi) {
            if self.is_p(i, ",") {
                segments.push((start, i));
                start = i + 1;
            }
        }
        segments.push((start, hi));
        segments
    }

    /// First top-level `;`, `{`, directive or `hi`.
    fn scan_head(&self, lo: usize, hi: usize) -> usize {
        self.find_top(lo, hi, |i| {
            self.is_p(i, ";")
                || self.is_p(i, "{")
                || self.toks[i].kind == TokenKind::Macro
                || self.is_include(i)
        })
        .unwrap_or(hi)
    }

    /// First top-level `;` or directive, stepping over braces.
    fn scan_to_semicolon(&self, lo: usize, hi: usize) -> usize {
        self.find_top(lo, hi, |i| {
            self.is_p(i, ";") || self.toks[i].kind == TokenKind::Macro || self.is_include(i)
        })
        .unwrap_or(hi)
    }

    fn past_semicolon(&self, end: usize, hi: usize) -> usize {
        if end < hi && self.is_p(end, ";") {
            end + 1
        } else {
            end
        }
    }

    fn has_top_assign(&self, lo: usize, hi: usize) -> bool {
        self.find_top(lo, hi, |i| {
            self.is_p(i, "=") && !(i > lo && self.is_kw(i - 1, "operator"))
        })
        .is_some()
    }

    // ---------------------------------------------------------------
    // file / class / namespace scope

    fn decl_scope(&self, lo: usize, hi: usize) -> Vec<SyntaxNode> {
        let mut items = Vec::new();
        let mut i = lo;
        while i < hi {
            let (item, next) = self.decl_item(i, hi);
            debug_assert!(next > i);
            items.extend(item);
            i = next.max(i + 1);
        }
        items
    }

    fn decl_item(&self, i: usize, hi: usize) -> (Option<SyntaxNode>, usize) {
        let t = &self.toks[i];
        if self.is_p(i, ";") {
            return (None, i + 1);
        }
        if t.kind == TokenKind::Macro {
            return (Some(leaf(NodeType::Other)), i + 1);
        }
        if self.is_include(i) {
            return (Some(leaf(NodeType::Import)), self.skip_include(i, hi));
        }
        if t.kind == TokenKind::Keyword {
            match t.text.as_str() {
                "import" => {
                    let end = self.scan_to_semicolon(i + 1, hi);
                    return (Some(leaf(NodeType::Import)), self.past_semicolon(end, hi));
                }
                "package" => {
                    let end = self.scan_to_semicolon(i + 1, hi);
                    return (Some(leaf(NodeType::Other)), self.past_semicolon(end, hi));
                }
                "public" | "private" | "protected" if self.is_p(i + 1, ":") => {
                    return (None, i + 2);
                }
                kw if STATEMENT_KEYWORDS.contains(&kw) => return self.statement(i, hi),
                _ => {}
            }
        }

        let stop = self.scan_head(i, hi);
        if stop < hi && self.is_p(stop, "{") {
            let close = self.pair[stop];
            if self.has_top_assign(i, stop) {
                let end = self.scan_to_semicolon(close + 1, hi);
                return (Some(self.declaration(i, end)), self.past_semicolon(end, hi));
            }
            if let Some(is_enum) = self.class_keyword(i, stop) {
                return (Some(self.class_node(is_enum, stop, close)), close + 1);
            }
            if self.is_kw(i, "namespace") || self.is_kw(i, "extern") {
                let members = self.decl_scope(stop + 1, close);
                return (Some(node(NodeType::Other, members)), close + 1);
            }
            if let Some((po, pc)) = self.function_head(i, stop) {
                return (Some(self.function(po, pc, stop)), close + 1);
            }
            if stop == i {
                return (Some(self.block(stop)), close + 1);
            }
            if self.is_declaration(i, stop) {
                // brace initialiser: `int x{5};`
                let end = self.scan_to_semicolon(close + 1, hi);
                return (Some(self.declaration(i, end)), self.past_semicolon(end, hi));
            }
            return (Some(node(NodeType::Other, vec![self.block(stop)])), close + 1);
        }

        let item = if self.is_declaration(i, stop) {
            self.declaration(i, stop)
        } else {
            leaf(NodeType::Other)
        };
        (Some(item), self.past_semicolon(stop, hi).max(i + 1))
    }

    fn skip_include(&self, i: usize, hi: usize) -> usize {
        let line = self.toks[i].line;
        let mut j = i + 1;
        while j < hi
            && self.toks[j].line == line
            && (self.toks[j].kind == TokenKind::ImportName
                || self.is_p(j, "<")
                || self.is_p(j, ">")
                || self.is_p(j, "\""))
        {
            j += 1;
        }
        j
    }

    /// `Some(is_enum)` when the head introduces a class-like type.
    fn class_keyword(&self, lo: usize, hi: usize) -> Option<bool> {
        let mut angle: i32 = 0;
        let mut found: Option<(usize, bool)> = None;
        for i in self.top_positions(lo, hi) {
            let t = &self.toks[i];
            if t.kind == TokenKind::Punctuation {
                match t.text.as_str() {
                    "<" => angle += 1,
                    ">" => angle = (angle - 1).max(0),
                    ">>" => angle = (angle - 2).max(0),
                    _ => {}
                }
            } else if angle == 0
                && found.is_none()
                && t.kind == TokenKind::Keyword
                && CLASS_KEYWORDS.contains(&t.text.as_str())
            {
                found = Some((i, t.text == "enum"));
            }
        }
        let (at, is_enum) = found?;
        if self.find_top(at, hi, |i| self.is_p(i, "(")).is_some() {
            return None;
        }
        Some(is_enum)
    }

    fn class_node(&self, is_enum: bool, open: usize, close: usize) -> SyntaxNode {
        if !is_enum {
            return node(NodeType::Class, self.decl_scope(open + 1, close));
        }
        let semi = self
            .find_top(open + 1, close, |i| self.is_p(i, ";"))
            .unwrap_or(close);
        let mut children: Vec<SyntaxNode> = self
            .split_commas(open + 1, semi)
            .into_iter()
            .filter(|(a, b)| a < b)
            .map(|_| leaf(NodeType::Identifier))
            .collect();
        if semi < close {
            children.extend(self.decl_scope(semi + 1, close));
        }
        node(NodeType::Class, children)
    }

    /// Locates `name(params)` in a definition head ending just before `{`.
    fn function_head(&self, lo: usize, hi: usize) -> Option<(usize, usize)> {
        if self.has_top_assign(lo, hi) {
            return None;
        }
        for p in self.top_positions(lo, hi) {
            if !self.is_p(p, "(") || p == lo {
                continue;
            }
            let prev = &self.toks[p - 1];
            let named = prev.kind == TokenKind::Identifier && !(p >= lo + 2 && self.is_p(p - 2, "@"));
            if !(named || self.operator_name(lo, p)) {
                continue;
            }
            let q = self.pair[p];
            if self.trailer_ok(q + 1, hi) {
                return Some((p, q));
            }
        }
        None
    }

    /// `operator+=` style names: symbols back to an `operator` keyword.
    fn operator_name(&self, lo: usize, p: usize) -> bool {
        let mut k = p;
        while k > lo && self.toks[k - 1].kind == TokenKind::Punctuation {
            k -= 1;
        }
        k > lo && k < p && self.is_kw(k - 1, "operator")
    }

    /// What may sit between a parameter list and the body: qualifiers,
    /// `throws` lists, trailing return types or a constructor init list.
    fn trailer_ok(&self, from: usize, hi: usize) -> bool {
        if from >= hi || self.is_p(from, ":") {
            return true;
        }
        let mut i = from;
        while i < hi {
            let t = &self.toks[i];
            let ok = match t.kind {
                TokenKind::Keyword | TokenKind::Identifier => true,
                TokenKind::Punctuation => match t.text.as_str() {
                    "," | "." | "::" | "&" | "&&" | "->" | "<" | ">" | ">>" | "*" => true,
                    "(" => i > from && (self.is_kw(i - 1, "noexcept") || self.is_kw(i - 1, "throw")),
                    _ => false,
                },
                _ => false,
            };
            if !ok {
                return false;
            }
            i = self.next_top(i);
        }
        true
    }

    fn function(&self, po: usize, pc: usize, open: usize) -> SyntaxNode {
        let segments: Vec<_> = self
            .split_commas(po + 1, pc)
            .into_iter()
            .filter(|(a, b)| a < b)
            .collect();
        let only_void = segments.len() == 1 && {
            let (a, b) = segments[0];
            b == a + 1 && self.is_kw(a, "void")
        };
        let params = if only_void {
            Vec::new()
        } else {
            segments.iter().map(|_| leaf(NodeType::Parameter)).collect()
        };
        node(
            NodeType::Function,
            vec![node(NodeType::ParameterList, params), self.block(open)],
        )
    }

    fn block(&self, open: usize) -> SyntaxNode {
        node(NodeType::Block, self.block_items(open + 1, self.pair[open]))
    }

    // ---------------------------------------------------------------
    // declarations

    /// End of a declaration head: first top-level `=`, `(`, `{` or `:`.
    fn decl_head_end(&self, lo: usize, hi: usize) -> usize {
        self.find_top(lo, hi, |i| {
            self.is_p(i, "=") || self.is_p(i, "(") || self.is_p(i, "{") || self.is_p(i, ":")
        })
        .unwrap_or(hi)
    }

    /// `Type name`, `std::vector<int> v`, `int a, b`, `final int[] xs` ...
    fn is_declaration(&self, lo: usize, hi: usize) -> bool {
        let stop = self.decl_head_end(lo, hi);
        if stop == lo {
            return false;
        }
        let mut angle: i32 = 0;
        let mut names = 0;
        let mut joined = false;
        let mut last_is_ident = false;
        for i in self.top_positions(lo, stop) {
            let t = &self.toks[i];
            match t.kind {
                TokenKind::Identifier => {
                    if angle == 0 && !joined {
                        names += 1;
                    }
                    joined = false;
                    last_is_ident = true;
                }
                TokenKind::Keyword if DECL_KEYWORDS.contains(&t.text.as_str()) => {
                    if angle == 0 && !joined {
                        names += 1;
                    }
                    joined = false;
                    last_is_ident = false;
                }
                TokenKind::Literal if angle > 0 => last_is_ident = false,
                TokenKind::Punctuation => match t.text.as_str() {
                    "[" => {}
                    "::" | "." => {
                        joined = true;
                        last_is_ident = false;
                    }
                    "<" => {
                        angle += 1;
                        last_is_ident = false;
                    }
                    // a closer with nothing open is a shift or comparison
                    ">" | ">>" if angle == 0 => return false,
                    ">" => {
                        angle -= 1;
                        last_is_ident = false;
                    }
                    ">>" => {
                        angle = (angle - 2).max(0);
                        last_is_ident = false;
                    }
                    "," | "*" | "&" | "&&" | "..." | "?" | "@" => {
                        if i == lo {
                            return false;
                        }
                        last_is_ident = false;
                    }
                    _ => return false,
                },
                _ => return false,
            }
        }
        last_is_ident && names >= 2
    }

    fn declaration(&self, lo: usize, hi: usize) -> SyntaxNode {
        let stop = self.decl_head_end(lo, hi);
        let mut children = Vec::new();
        let mut from = stop;
        if stop < hi && self.is_p(stop, "(") {
            let close = self.pair[stop];
            for (a, b) in self.split_commas(stop + 1, close) {
                children.extend(self.expr(a, b));
            }
            from = close + 1;
        } else if stop < hi && self.is_p(stop, "{") {
            let close = self.pair[stop];
            children.extend(self.expr(stop, close + 1));
            from = close + 1;
        }
        let mut i = from;
        while i < hi {
            if self.is_p(i, "=") {
                let end = self.find_top(i + 1, hi, |k| self.is_p(k, ",")).unwrap_or(hi);
                children.extend(self.expr(i + 1, end));
                i = end;
            } else {
                i = self.next_top(i);
            }
        }
        node(NodeType::Declaration, children)
    }

    /// Declaration if it looks like one, expression otherwise.
    fn clause(&self, lo: usize, hi: usize) -> Option<SyntaxNode> {
        if lo >= hi {
            None
        } else if self.is_declaration(lo, hi) {
            Some(self.declaration(lo, hi))
        } else {
            self.expr(lo, hi)
        }
    }

    // ---------------------------------------------------------------
    // statements

    fn block_items(&self, lo: usize, hi: usize) -> Vec<SyntaxNode> {
        let mut items = Vec::new();
        let mut i = lo;
        while i < hi {
            let (item, next) = self.statement(i, hi);
            debug_assert!(next > i);
            items.extend(item);
            i = next.max(i + 1);
        }
        items
    }

    fn statement_or_none(&self, i: usize, hi: usize) -> (Option<SyntaxNode>, usize) {
        if i >= hi {
            (None, i)
        } else {
            self.statement(i, hi)
        }
    }

    fn statement(&self, i: usize, hi: usize) -> (Option<SyntaxNode>, usize) {
        let t = &self.toks[i];
        if self.is_p(i, "{") {
            return (Some(self.block(i)), self.pair[i] + 1);
        }
        if self.is_p(i, ";") {
            return (None, i + 1);
        }
        if t.kind == TokenKind::Macro {
            return (Some(leaf(NodeType::Other)), i + 1);
        }
        if self.is_include(i) {
            return (Some(leaf(NodeType::Import)), self.skip_include(i, hi));
        }
        if t.kind == TokenKind::Identifier && self.is_p(i + 1, ":") && i + 1 < hi {
            // label
            return (None, i + 2);
        }
        if t.kind == TokenKind::Keyword {
            match t.text.as_str() {
                "if" => return self.if_statement(i, hi),
                "else" => {
                    let (body, next) = self.statement_or_none(i + 1, hi);
                    return (Some(node(NodeType::Else, body.into_iter().collect())), next);
                }
                "for" => return self.for_statement(i, hi),
                "while" => return self.while_statement(i, hi),
                "do" => return self.do_statement(i, hi),
                "switch" => return self.switch_statement(i, hi),
                "return" | "throw" => {
                    let end = self.scan_to_semicolon(i + 1, hi);
                    let kind = if t.text == "return" {
                        NodeType::Return
                    } else {
                        NodeType::Other
                    };
                    let children = self.expr(i + 1, end).into_iter().collect();
                    return (Some(node(kind, children)), self.past_semicolon(end, hi));
                }
                "break" | "continue" | "goto" => {
                    let end = self.scan_to_semicolon(i + 1, hi);
                    return (Some(leaf(NodeType::Other)), self.past_semicolon(end, hi));
                }
                "try" => return self.try_statement(i, hi),
                "case" | "default" => {
                    let colon = self.case_colon(i + 1, hi);
                    return (Some(leaf(NodeType::Case)), (colon + 1).min(hi));
                }
                "synchronized" if self.is_p(i + 1, "(") => {
                    let close = self.pair[i + 1];
                    let mut children: Vec<SyntaxNode> = self.expr(i + 2, close).into_iter().collect();
                    let (body, next) = self.statement_or_none(close + 1, hi);
                    children.extend(body);
                    return (Some(node(NodeType::Other, children)), next);
                }
                "import" | "package" => return self.decl_item(i, hi),
                _ => {}
            }
        }

        let stop = self.scan_head(i, hi);
        if stop < hi && self.is_p(stop, "{") && stop > i && !self.has_top_assign(i, stop) {
            let close = self.pair[stop];
            if let Some(is_enum) = self.class_keyword(i, stop) {
                return (Some(self.class_node(is_enum, stop, close)), close + 1);
            }
            if let Some((po, pc)) = self.function_head(i, stop) {
                return (Some(self.function(po, pc, stop)), close + 1);
            }
        }

        let end = self.scan_to_semicolon(i, hi);
        let item = self.clause(i, end);
        (item, self.past_semicolon(end, hi).max(i + 1))
    }

    /// Condition in parentheses right after a keyword, if present.
    fn paren_condition(&self, at: usize, hi: usize) -> (Option<SyntaxNode>, usize) {
        if at < hi && self.is_p(at, "(") {
            let close = self.pair[at];
            (self.expr(at + 1, close), close + 1)
        } else {
            (None, at)
        }
    }

    fn if_statement(&self, i: usize, hi: usize) -> (Option<SyntaxNode>, usize) {
        let mut j = i + 1;
        while j < hi && self.is_kw(j, "constexpr") {
            j += 1;
        }
        let (cond, j) = self.paren_condition(j, hi);
        let mut children: Vec<SyntaxNode> = cond.into_iter().collect();
        let (body, mut j) = self.statement_or_none(j, hi);
        children.extend(body);
        if j < hi && self.is_kw(j, "else") {
            let (alt, next) = self.statement_or_none(j + 1, hi);
            children.push(node(NodeType::Else, alt.into_iter().collect()));
            j = next;
        }
        (Some(node(NodeType::If, children)), j)
    }

    fn for_statement(&self, i: usize, hi: usize) -> (Option<SyntaxNode>, usize) {
        let mut children = Vec::new();
        let mut j = i + 1;
        if j < hi && self.is_p(j, "(") {
            let close = self.pair[j];
            children.extend(self.for_header(j + 1, close));
            j = close + 1;
        }
        let (body, next) = self.statement_or_none(j, hi);
        children.extend(body);
        (Some(node(NodeType::For, children)), next)
    }

    fn for_header(&self, lo: usize, hi: usize) -> Vec<SyntaxNode> {
        let semis: Vec<usize> = self
            .top_positions(lo, hi)
            .filter(|&k| self.is_p(k, ";"))
            .collect();
        let mut out = Vec::new();
        if let Some(&first) = semis.first() {
            out.extend(self.clause(lo, first));
            let second = semis.get(1).copied().unwrap_or(hi);
            out.extend(self.expr(first + 1, second));
            if second < hi {
                out.extend(self.expr(second + 1, hi));
            }
        } else if let Some(colon) = self.find_top(lo, hi, |k| self.is_p(k, ":")) {
            out.extend(self.clause(lo, colon));
            out.extend(self.expr(colon + 1, hi));
        } else {
            out.extend(self.expr(lo, hi));
        }
        out
    }

    fn while_statement(&self, i: usize, hi: usize) -> (Option<SyntaxNode>, usize) {
        let (cond, j) = self.paren_condition(i + 1, hi);
        let mut children: Vec<SyntaxNode> = cond.into_iter().collect();
        let (body, next) = self.statement_or_none(j, hi);
        children.extend(body);
        (Some(node(NodeType::While, children)), next)
    }

    fn do_statement(&self, i: usize, hi: usize) -> (Option<SyntaxNode>, usize) {
        let (body, mut j) = self.statement_or_none(i + 1, hi);
        let mut children: Vec<SyntaxNode> = body.into_iter().collect();
        if j < hi && self.is_kw(j, "while") {
            let (cond, next) = self.paren_condition(j + 1, hi);
            children.extend(cond);
            j = next;
        }
        (Some(node(NodeType::DoWhile, children)), self.past_semicolon(j, hi))
    }

    fn switch_statement(&self, i: usize, hi: usize) -> (Option<SyntaxNode>, usize) {
        let (cond, j) = self.paren_condition(i + 1, hi);
        let mut children: Vec<SyntaxNode> = cond.into_iter().collect();
        if j < hi && self.is_p(j, "{") {
            let close = self.pair[j];
            children.extend(self.switch_body(j + 1, close));
            return (Some(node(NodeType::Switch, children)), close + 1);
        }
        let (body, next) = self.statement_or_none(j, hi);
        children.extend(body);
        (Some(node(NodeType::Switch, children)), next)
    }

    /// Position of the `:` (or Java `->`) closing a case label.
    fn case_colon(&self, lo: usize, hi: usize) -> usize {
        self.find_top(lo, hi, |k| self.is_p(k, ":") || self.is_p(k, "->"))
            .unwrap_or(hi)
    }

    fn switch_body(&self, lo: usize, hi: usize) -> Vec<SyntaxNode> {
        let mut out = Vec::new();
        let mut current: Option<SyntaxNode> = None;
        let mut i = lo;
        while i < hi {
            if self.is_kw(i, "case") || self.is_kw(i, "default") {
                out.extend(current.take());
                let colon = self.case_colon(i + 1, hi);
                let label = if self.is_kw(i, "case") {
                    self.expr(i + 1, colon).into_iter().collect()
                } else {
                    Vec::new()
                };
                current = Some(node(NodeType::Case, label));
                i = (colon + 1).min(hi);
            } else {
                let (stmt, next) = self.statement(i, hi);
                if let Some(stmt) = stmt {
                    match current.as_mut() {
                        Some(case) => case.children.push(stmt),
                        None => out.push(stmt),
                    }
                }
                i = next.max(i + 1);
            }
        }
        out.extend(current);
        out
    }

    fn try_statement(&self, i: usize, hi: usize) -> (Option<SyntaxNode>, usize) {
        let mut children = Vec::new();
        let mut j = i + 1;
        if j < hi && self.is_p(j, "(") {
            // try-with-resources
            let close = self.pair[j];
            for (a, b) in self
                .top_positions(j + 1, close)
                .filter(|&k| self.is_p(k, ";"))
                .chain(std::iter::once(close))
                .scan(j + 1, |start, end| {
                    let seg = (*start, end);
                    *start = end + 1;
                    Some(seg)
                })
            {
                children.extend(self.clause(a, b));
            }
            j = close + 1;
        }
        if j < hi && self.is_p(j, "{") {
            children.push(self.block(j));
            j = self.pair[j] + 1;
        }
        loop {
            if j < hi && self.is_kw(j, "catch") {
                j += 1;
                if j < hi && self.is_p(j, "(") {
                    j = self.pair[j] + 1;
                }
            } else if j < hi && self.is_kw(j, "finally") {
                j += 1;
            } else {
                break;
            }
            if j < hi && self.is_p(j, "{") {
                children.push(self.block(j));
                j = self.pair[j] + 1;
            }
        }
        (Some(node(NodeType::Other, children)), j.max(i + 1))
    }

    // ---------------------------------------------------------------
    // expressions

    fn expr(&self, lo: usize, hi: usize) -> Option<SyntaxNode> {
        if lo >= hi {
            return None;
        }
        if let Some(a) = self.find_top(lo, hi, |k| {
            self.toks[k].kind == TokenKind::Punctuation
                && ASSIGN_OPS.contains(&self.toks[k].text.as_str())
        }) {
            let children = self.expr(lo, a).into_iter().chain(self.expr(a + 1, hi)).collect();
            return Some(node(NodeType::BinaryOp, children));
        }
        if let Some(q) = self.find_top(lo, hi, |k| self.is_p(k, "?") && !self.is_wildcard(k)) {
            let mut depth = 0;
            let colon = self.find_top(q + 1, hi, |k| {
                if self.is_p(k, "?") {
                    depth += 1;
                } else if self.is_p(k, ":") {
                    if depth == 0 {
                        return true;
                    }
                    depth -= 1;
                }
                false
            });
            let mut children: Vec<SyntaxNode> = self.expr(lo, q).into_iter().collect();
            match colon {
                Some(c) => {
                    children.extend(self.expr(q + 1, c));
                    children.extend(self.expr(c + 1, hi));
                }
                None => children.extend(self.expr(q + 1, hi)),
            }
            return Some(node(NodeType::Ternary, children));
        }

        let mut segments = Vec::new();
        let mut start = lo;
        let mut after_operand = false;
        let mut new_type = false;
        for k in self.top_positions(lo, hi) {
            let t = &self.toks[k];
            if self.is_kw(k, "new") {
                new_type = true;
            } else if new_type {
                if t.kind == TokenKind::Punctuation && !is_type_punct(&t.text) {
                    new_type = false;
                } else {
                    after_operand = false;
                    continue;
                }
            }
            if t.kind == TokenKind::Punctuation
                && after_operand
                && BINARY_OPS.contains(&t.text.as_str())
            {
                segments.push((start, k));
                start = k + 1;
                after_operand = false;
                continue;
            }
            after_operand = match t.kind {
                TokenKind::Identifier | TokenKind::Literal | TokenKind::StringLiteral => true,
                TokenKind::Keyword => matches!(t.text.as_str(), "this" | "super"),
                TokenKind::Punctuation => match t.text.as_str() {
                    "(" | "[" | "{" => true,
                    "++" | "--" => after_operand,
                    _ => false,
                },
                _ => false,
            };
        }
        if segments.is_empty() {
            return self.unary(lo, hi);
        }
        segments.push((start, hi));
        let children = segments
            .into_iter()
            .filter_map(|(a, b)| self.unary(a, b))
            .collect();
        Some(node(NodeType::BinaryOp, children))
    }

    /// `?` in `List<?>` or `Map<K, ? extends V>`.
    fn is_wildcard(&self, k: usize) -> bool {
        k > 0 && (self.is_p(k - 1, "<") || self.is_p(k - 1, ","))
    }

    fn unary(&self, lo: usize, hi: usize) -> Option<SyntaxNode> {
        if lo >= hi {
            return None;
        }
        let first = &self.toks[lo];
        if first.kind == TokenKind::Punctuation && PREFIX_OPS.contains(&first.text.as_str()) {
            return Some(node(NodeType::UnaryOp, self.unary(lo + 1, hi).into_iter().collect()));
        }
        if hi - lo > 1 && (self.is_p(hi - 1, "++") || self.is_p(hi - 1, "--")) {
            return Some(node(NodeType::UnaryOp, self.postfix(lo, hi - 1).into_iter().collect()));
        }
        self.postfix(lo, hi)
    }

    fn postfix(&self, lo: usize, hi: usize) -> Option<SyntaxNode> {
        let mut items = Vec::new();
        let mut j = lo;
        while j < hi {
            let t = &self.toks[j];
            let mut current = match t.kind {
                TokenKind::Keyword if t.text == "new" => {
                    // `new pkg.Type<A>` names one type
                    j += 1;
                    while j < hi
                        && (matches!(self.toks[j].kind, TokenKind::Identifier | TokenKind::Keyword)
                            || (self.toks[j].kind == TokenKind::Punctuation && is_type_punct(&self.toks[j].text)))
                    {
                        j += 1;
                    }
                    Some(leaf(NodeType::Identifier))
                }
                TokenKind::Identifier => {
                    j += 1;
                    Some(leaf(NodeType::Identifier))
                }
                TokenKind::Keyword if matches!(t.text.as_str(), "this" | "super") => {
                    j += 1;
                    Some(leaf(NodeType::Identifier))
                }
                TokenKind::Literal | TokenKind::StringLiteral => {
                    j += 1;
                    Some(leaf(NodeType::Literal))
                }
                TokenKind::Punctuation if t.text == "(" => {
                    let close = self.pair[j];
                    let inner = self.expr(j + 1, close);
                    j = close + 1;
                    inner
                }
                TokenKind::Punctuation if t.text == "{" => {
                    let close = self.pair[j];
                    let brace = self.brace_expr(j);
                    j = close + 1;
                    items.push(brace);
                    continue;
                }
                _ => {
                    // keywords such as `new`, casts' type names, `[]` captures
                    j = self.next_top(j);
                    continue;
                }
            };
            while j < hi {
                let t = &self.toks[j];
                if t.kind != TokenKind::Punctuation {
                    break;
                }
                match t.text.as_str() {
                    "." | "->" | "::" | "->*" => {
                        let named = self.toks.get(j + 1).is_some_and(|n| {
                            j + 1 < hi && matches!(n.kind, TokenKind::Identifier | TokenKind::Keyword)
                        });
                        j += if named { 2 } else { 1 };
                    }
                    "(" => {
                        let close = self.pair[j];
                        let mut children: Vec<SyntaxNode> = current.take().into_iter().collect();
                        for (a, b) in self.split_commas(j + 1, close) {
                            children.extend(self.expr(a, b));
                        }
                        current = Some(node(NodeType::Call, children));
                        j = close + 1;
                    }
                    "[" => {
                        let close = self.pair[j];
                        let children = current
                            .take()
                            .into_iter()
                            .chain(self.expr(j + 1, close))
                            .collect();
                        current = Some(node(NodeType::BinaryOp, children));
                        j = close + 1;
                    }
                    _ => break,
                }
            }
            items.extend(current);
        }
        match items.len() {
            0 => None,
            1 => items.pop(),
            _ => Some(node(NodeType::Other, items)),
        }
    }

    /// A `{...}` inside an expression: lambda / anonymous-class body after
    /// `)` or `->`, initialiser list otherwise.
    fn brace_expr(&self, open: usize) -> SyntaxNode {
        let close = self.pair[open];
        let body_like = open > 0 && (self.is_p(open - 1, ")") || self.is_p(open - 1, "->"));
        if body_like {
            return self.block(open);
        }
        let elements = self
            .split_commas(open + 1, close)
            .into_iter()
            .filter_map(|(a, b)| self.expr(a, b))
            .collect();
        node(NodeType::Other, elements)
    }
}

/// Punctuation that can occur inside a type name after `new`.
fn is_type_punct(text: &str) -> bool {
    matches!(text, "." | "::" | "<" | ">" | ">>" | ">>>" | "?" | ",")
}

struct TopIter<'p, 't> {
    parser: &'p Parser<'t>,
    pos: usize,
    hi: usize,
}

impl Iterator for TopIter<'_, '_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.pos >= self.hi {
            return None;
        }
        let at = self.pos;
        self.pos = self.parser.next_top(at);
        Some(at)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Language, LanguageProfile};
    use crate::tokenizer::tokenize;
    use proptest::prelude::*;

    fn parse(src: &str, lang: Language) -> SyntaxTree {
        parse_syntax(&tokenize("t", src, &LanguageProfile::builtin(lang)))
    }

    fn sexpr(src: &str, lang: Language) -> String {
        parse(src, lang).root.to_sexpr()
    }

    #[test]
    fn function_with_if_and_returns() {
        assert_eq!(
            sexpr("int f(int a, int b){ if(a>b) return a; return b; }", Language::Cpp),
            "TranslationUnit(Function(ParameterList(Parameter Parameter) \
             Block(If(BinaryOp(Identifier Identifier) Return(Identifier)) Return(Identifier))))"
        );
    }

    #[test]
    fn empty_file() {
        let t = parse("", Language::Cpp);
        assert_eq!(t.root.to_sexpr(), "TranslationUnit");
        assert_eq!(t.node_count, 1);
        assert!(t.diagnostics.is_empty());
    }

    #[test]
    fn nested_loops_at_file_scope() {
        assert_eq!(
            sexpr("while(x){ while(y){ z(); } }", Language::Cpp),
            "TranslationUnit(While(Identifier Block(While(Identifier Block(Call(Identifier))))))"
        );
    }

    #[test]
    fn includes_and_macros() {
        assert_eq!(
            sexpr("#include <vector>\n#define N 10\nusing namespace std;\n", Language::Cpp),
            "TranslationUnit(Import Other Other)"
        );
    }

    #[test]
    fn declarations() {
        assert_eq!(
            sexpr("void g() { int x = 0; std::vector<int> v; x = v.size(); }", Language::Cpp),
            "TranslationUnit(Function(ParameterList Block(Declaration(Literal) Declaration \
             BinaryOp(Identifier Call(Identifier)))))"
        );
        assert_eq!(
            sexpr("void g(void) { Foo f(1, y); int a[] = {1, 2}; }", Language::Cpp),
            "TranslationUnit(Function(ParameterList Block(Declaration(Literal Identifier) \
             Declaration(Other(Literal Literal)))))"
        );
    }

    #[test]
    fn for_loops() {
        assert_eq!(
            sexpr("void g() { for (int i = 0; i < n; i++) s += i; }", Language::Cpp),
            "TranslationUnit(Function(ParameterList Block(For(Declaration(Literal) \
             BinaryOp(Identifier Identifier) UnaryOp(Identifier) BinaryOp(Identifier Identifier)))))"
        );
        assert_eq!(
            sexpr("void g() { for (int x : xs) { } }", Language::Java),
            "TranslationUnit(Function(ParameterList Block(For(Declaration Identifier Block))))"
        );
    }

    #[test]
    fn else_if_chain_and_ternary() {
        assert_eq!(
            sexpr(
                "int s(int x) { if (x > 0) return 1; else if (x < 0) return -1; else return x ? 1 : 0; }",
                Language::Cpp
            ),
            "TranslationUnit(Function(ParameterList(Parameter) Block(If(BinaryOp(Identifier Literal) \
             Return(Literal) Else(If(BinaryOp(Identifier Literal) Return(UnaryOp(Literal)) \
             Else(Return(Ternary(Identifier Literal Literal)))))))))"
        );
    }

    #[test]
    fn switch_do_while() {
        assert_eq!(
            sexpr(
                "void g() { switch (k) { case 1: a(); break; default: b(); } do { k--; } while (k); }",
                Language::Cpp
            ),
            "TranslationUnit(Function(ParameterList Block(Switch(Identifier Case(Literal Call(Identifier) Other) \
             Case(Call(Identifier))) DoWhile(Block(UnaryOp(Identifier)) Identifier))))"
        );
    }

    #[test]
    fn java_class_with_methods() {
        let src = "package a.b;\nimport java.util.List;\n@SuppressWarnings(\"x\")\npublic class A extends B {\n  private int n = 0;\n  @Override\n  public String toString() throws E { return \"A\" + n; }\n  A(int n) { this.n = n; }\n}\n";
        assert_eq!(
            sexpr(src, Language::Java),
            "TranslationUnit(Other Import Class(Declaration(Literal) \
             Function(ParameterList Block(Return(BinaryOp(Literal Identifier)))) \
             Function(ParameterList(Parameter) Block(BinaryOp(Identifier Identifier)))))"
        );
    }

    #[test]
    fn cpp_class_access_specifiers_and_ctor_init() {
        let src = "struct P {\npublic:\n  P(int x) : x_(x) {}\n  int get() const { return x_; }\nprivate:\n  int x_;\n};";
        assert_eq!(
            sexpr(src, Language::Cpp),
            "TranslationUnit(Class(Function(ParameterList(Parameter) Block) \
             Function(ParameterList Block(Return(Identifier))) Declaration))"
        );
    }

    #[test]
    fn enum_constants() {
        assert_eq!(
            sexpr("enum Color { RED, GREEN, BLUE };", Language::Cpp),
            "TranslationUnit(Class(Identifier Identifier Identifier))"
        );
    }

    #[test]
    fn lambda_and_anonymous_class_bodies() {
        assert_eq!(
            sexpr("void g() { auto f = [](int a) { return a; }; }", Language::Cpp),
            "TranslationUnit(Function(ParameterList Block(Declaration(Other(Identifier Block(Return(Identifier)))))))"
        );
        assert_eq!(
            sexpr(
                "class A { void g() { run(new R() { public void r() { x(); } }); } }",
                Language::Java
            ),
            "TranslationUnit(Class(Function(ParameterList Block(Call(Identifier \
             Other(Call(Identifier) Block(Function(ParameterList Block(Call(Identifier))))))))))"
        );
    }

    #[test]
    fn try_catch_finally() {
        assert_eq!(
            sexpr("void g() { try { a(); } catch (E e) { b(); } finally { c(); } }", Language::Java),
            "TranslationUnit(Function(ParameterList Block(Other(Block(Call(Identifier)) \
             Block(Call(Identifier)) Block(Call(Identifier))))))"
        );
    }

    #[test]
    fn shift_is_not_a_declaration() {
        assert_eq!(
            sexpr("void g() { std::cin >> n; List<List<T>> xs; }", Language::Cpp),
            "TranslationUnit(Function(ParameterList Block(BinaryOp(Identifier Identifier) Declaration)))"
        );
    }

    #[test]
    fn new_expressions() {
        assert_eq!(
            sexpr("void g() { List<String> a = new ArrayList<>(); int[] b = new int[n]; }", Language::Java),
            "TranslationUnit(Function(ParameterList Block(Declaration(Call(Identifier)) \
             Declaration(BinaryOp(Identifier Identifier)))))"
        );
    }

    #[test]
    fn broken_input_is_tolerated() {
        let t = parse("void f( { if (x { y(); }\n}}} )", Language::Cpp);
        assert!(!t.diagnostics.is_empty());
        assert_eq!(t.root.kind, NodeType::TranslationUnit);
        let t = parse("int main() { while (1) {", Language::Cpp);
        assert_eq!(t.diagnostics.len(), 2);
        assert_eq!(
            t.root.to_sexpr(),
            "TranslationUnit(Function(ParameterList Block(While(Literal Block))))"
        );
    }

    proptest! {
        #[test]
        fn parse_is_total(src in "[a-z(){};=<>?:,.+*&!\\[\\] \n0-9\"#]{0,160}") {
            for lang in [Language::Cpp, Language::Java] {
                let t = parse(&src, lang);
                prop_assert_eq!(t.root.kind, NodeType::TranslationUnit);
                prop_assert_eq!(t.root.depth, 1);
            }
        }

        #[test]
        fn parse_of_keyword_soup_is_total(
            words in proptest::collection::vec(
                prop_oneof![
                    Just("if"), Just("else"), Just("for"), Just("while"), Just("do"),
                    Just("switch"), Just("case"), Just("default"), Just("return"), Just("class"),
                    Just("enum"), Just("try"), Just("catch"), Just("int"), Just("x"), Just("("),
                    Just(")"), Just("{"), Just("}"), Just(";"), Just(":"), Just("="), Just("?"),
                    Just(","), Just("["), Just("]"), Just("<"), Just(">"), Just("1"),
                ],
                0..80,
            )
        ) {
            let src = words.join(" ");
            let t = parse(&src, Language::Cpp);
            prop_assert_eq!(t.root.kind, NodeType::TranslationUnit);
        }
    }
}
