//! Text-level layout metrics: smoothed densities, line statistics,
//! whitespace habits and brace placement.

use serde::{Deserialize, Serialize};

use crate::syntax::{parse_syntax, NodeType, SyntaxTree};
use crate::tokenizer::{TokenKind, TokenStream};

pub const HISTOGRAM_BINS: usize = 16;
pub const HISTOGRAM_BIN_WIDTH: usize = 10;

const CONTROL_KEYWORDS: &[&str] = &["do", "if", "else", "switch", "for", "while"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutMetrics {
    pub control_structure_density: f64,
    pub ternary_operator_density: f64,
    pub token_density: f64,
    pub comment_density: f64,
    pub literal_density: f64,
    pub keyword_density: f64,
    pub function_density: f64,
    pub macro_density: f64,
    pub tab_density: f64,
    pub space_density: f64,
    pub empty_line_density: f64,
    pub avg_line_length: f64,
    pub line_length_stddev: f64,
    pub whitespace_ratio: f64,
    pub newline_before_open_brace_ratio: f64,
    pub tab_indent_ratio: f64,
    pub avg_indent_width: f64,
    pub line_length_histogram: [f64; HISTOGRAM_BINS],
}

impl LayoutMetrics {
    pub const SCALAR_NAMES: [&'static str; 17] = [
        "control_structure_density",
        "ternary_operator_density",
        "token_density",
        "comment_density",
        "literal_density",
        "keyword_density",
        "function_density",
        "macro_density",
        "tab_density",
        "space_density",
        "empty_line_density",
        "avg_line_length",
        "line_length_stddev",
        "whitespace_ratio",
        "newline_before_open_brace_ratio",
        "tab_indent_ratio",
        "avg_indent_width",
    ];

    /// Scalars in [`Self::SCALAR_NAMES`] order.
    pub fn scalars(&self) -> [f64; 17] {
        [
            self.control_structure_density,
            self.ternary_operator_density,
            self.token_density,
            self.comment_density,
            self.literal_density,
            self.keyword_density,
            self.function_density,
            self.macro_density,
            self.tab_density,
            self.space_density,
            self.empty_line_density,
            self.avg_line_length,
            self.line_length_stddev,
            self.whitespace_ratio,
            self.newline_before_open_brace_ratio,
            self.tab_indent_ratio,
            self.avg_indent_width,
        ]
    }
}

/// `ln((count + 1) / (lines + 1))`.
pub fn smoothed_density(count: usize, lines: usize) -> f64 {
    ((count as f64 + 1.0) / (lines as f64 + 1.0)).ln()
}

pub fn layout_metrics(source: &str, stream: &TokenStream) -> LayoutMetrics {
    layout_metrics_with_tree(source, stream, &parse_syntax(stream))
}

pub fn layout_metrics_with_tree(
    source: &str,
    stream: &TokenStream,
    tree: &SyntaxTree,
) -> LayoutMetrics {
    let lines = split_lines(source);
    let n_lines = stream.line_count;
    let density = |count: usize| smoothed_density(count, n_lines);

    let significant: Vec<_> = stream.significant().collect();
    let mut control = 0usize;
    let mut ternary = 0usize;
    for (i, tok) in significant.iter().enumerate() {
        match tok.kind {
            TokenKind::Keyword if CONTROL_KEYWORDS.contains(&tok.text.as_str()) => {
                let else_if_tail = tok.text == "if" && i > 0 && significant[i - 1].is_keyword("else");
                if !else_if_tail {
                    control += 1;
                }
            }
            TokenKind::Punctuation if tok.text == "?" => {
                let wildcard = i > 0 && (significant[i - 1].is_punct("<") || significant[i - 1].is_punct(","));
                if !wildcard {
                    ternary += 1;
                }
            }
            _ => {}
        }
    }

    let count = |kind: TokenKind| stream.count(kind);
    let non_ws_tokens = stream.tokens.len() - count(TokenKind::Whitespace);
    let literals = count(TokenKind::Literal) + count(TokenKind::StringLiteral);

    let tabs = source.chars().filter(|&c| c == '\t').count();
    let spaces = source.chars().filter(|&c| c == ' ').count();
    let ws_chars = source.chars().filter(|c| c.is_whitespace()).count();
    let non_ws_chars = source.chars().count() - ws_chars;
    let empty_lines = lines.iter().filter(|l| l.trim().is_empty()).count();

    let lengths: Vec<usize> = lines.iter().map(|l| l.chars().count()).collect();
    let (avg_len, len_sd) = mean_sd(&lengths);

    let mut histogram = [0.0; HISTOGRAM_BINS];
    if !lengths.is_empty() {
        let mut counts = [0usize; HISTOGRAM_BINS];
        for &len in &lengths {
            counts[(len / HISTOGRAM_BIN_WIDTH).min(HISTOGRAM_BINS - 1)] += 1;
        }
        for (slot, c) in histogram.iter_mut().zip(counts) {
            *slot = c as f64 / lengths.len() as f64;
        }
    }

    let mut indented = 0usize;
    let mut tab_indented = 0usize;
    let mut indent_widths = Vec::new();
    for line in lines.iter().filter(|l| !l.trim().is_empty()) {
        let width = line.chars().take_while(|c| *c == ' ' || *c == '\t').count();
        indent_widths.push(width);
        if width > 0 {
            indented += 1;
            if line.starts_with('\t') {
                tab_indented += 1;
            }
        }
    }

    LayoutMetrics {
        control_structure_density: density(control),
        ternary_operator_density: density(ternary),
        token_density: density(non_ws_tokens),
        comment_density: density(count(TokenKind::Comment)),
        literal_density: density(literals),
        keyword_density: density(count(TokenKind::Keyword)),
        function_density: density(tree.count(NodeType::Function)),
        macro_density: density(count(TokenKind::Macro)),
        tab_density: density(tabs),
        space_density: density(spaces),
        empty_line_density: density(empty_lines),
        avg_line_length: avg_len,
        line_length_stddev: len_sd,
        whitespace_ratio: ratio(ws_chars, non_ws_chars),
        newline_before_open_brace_ratio: newline_brace_ratio(stream),
        tab_indent_ratio: ratio(tab_indented, indented),
        avg_indent_width: mean_sd(&indent_widths).0,
        line_length_histogram: histogram,
    }
}

/// Lines without their terminators (`\n`, and a `\r` before it). A final
/// newline does not open an extra empty line.
fn split_lines(source: &str) -> Vec<&str> {
    if source.is_empty() {
        return Vec::new();
    }
    let body = source.strip_suffix('\n').unwrap_or(source);
    body.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect()
}

/// Share of `{` that open their line: only whitespace containing a newline
/// (or the start of the file) lies between them and the previous token.
fn newline_brace_ratio(stream: &TokenStream) -> f64 {
    let mut braces = 0usize;
    let mut on_new_line = 0usize;
    for (i, tok) in stream.tokens.iter().enumerate() {
        if !tok.is_punct("{") {
            continue;
        }
        braces += 1;
        let mut j = i;
        let mut newline = true;
        while j > 0 {
            let prev = &stream.tokens[j - 1];
            if prev.kind != TokenKind::Whitespace {
                newline = false;
                break;
            }
            if prev.text.contains('\n') {
                break;
            }
            j -= 1;
        }
        if newline {
            on_new_line += 1;
        }
    }
    ratio(on_new_line, braces)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean_sd(xs: &[usize]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<usize>() as f64 / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
