//! Full-coverage lexer for C++ and Java.
//!
//! Every input character lands in exactly one token (whitespace runs
//! included), so concatenating token texts reproduces the source. Broken
//! input never aborts the scan: unterminated strings and block comments run
//! to end of file and leave a [`Diagnostic`] behind.

use serde::{Deserialize, Serialize};

use crate::profile::{Language, LanguageProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenKind {
    Comment,
    StringLiteral,
    Identifier,
    Keyword,
    ImportName,
    Literal,
    Punctuation,
    Whitespace,
    /// A preprocessor directive other than `#include`, one logical line.
    Macro,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
    /// Byte offset into the (lossily decoded) source.
    pub offset: usize,
}

impl Token {
    pub fn is_trivia(&self) -> bool {
        matches!(self.kind, TokenKind::Whitespace | TokenKind::Comment)
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.kind == TokenKind::Punctuation && self.text == text
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    UnterminatedString,
    UnterminatedComment,
    UnterminatedChar,
    UnmatchedDelimiter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub path: String,
    pub language: Language,
    pub tokens: Vec<Token>,
    pub line_count: usize,
    pub char_count: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl TokenStream {
    /// Tokens that carry meaning for the parser: no whitespace, no comments.
    pub fn significant(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| !t.is_trivia())
    }

    pub fn count(&self, kind: TokenKind) -> usize {
        self.tokens.iter().filter(|t| t.kind == kind).count()
    }

    /// Concatenation of all token texts; equals the decoded source.
    pub fn reconstruct(&self) -> String {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Re-renders the non-whitespace tokens separated by single spaces, with
    /// line breaks only where the lexer needs them: after line comments,
    /// around directives. `#include` targets are kept unspaced. Relexing the
    /// result yields the same significant token sequence.
    pub fn pretty(&self) -> String {
        let toks: Vec<&Token> = self
            .tokens
            .iter()
            .filter(|t| t.kind != TokenKind::Whitespace)
            .collect();
        let mut out = String::new();
        let mut i = 0;
        while i < toks.len() {
            let tok = toks[i];
            let is_include = tok.kind == TokenKind::Punctuation && tok.text.len() > 1 && tok.text.starts_with('#');
            if (is_include || tok.kind == TokenKind::Macro) && !out.is_empty() && !out.ends_with('\n') {
                out.push('\n');
            }
            if !out.is_empty() && !out.ends_with('\n') {
                out.push(' ');
            }
            out.push_str(&tok.text);
            i += 1;
            if is_include {
                out.push(' ');
                while i < toks.len()
                    && (toks[i].kind == TokenKind::ImportName
                        || (toks[i].kind == TokenKind::Punctuation
                            && matches!(toks[i].text.as_str(), "<" | ">" | "\"")))
                {
                    out.push_str(&toks[i].text);
                    i += 1;
                }
                out.push('\n');
            } else if tok.kind == TokenKind::Macro
                || (tok.kind == TokenKind::Comment && tok.text.starts_with("//"))
            {
                out.push('\n');
            }
        }
        out
    }
}

/// Operators recognised by maximal munch, longest first.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->*", "::", "->", "++", "--", "<<", ">>", "<=", ">=",
    "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
];

const LITERAL_WORDS: &[&str] = &["true", "false", "null", "nullptr"];

const CPP_STRING_PREFIXES: &[&str] = &["L", "u", "U", "u8", "R", "LR", "uR", "UR", "u8R"];

/// Tokenizes raw bytes, replacing invalid UTF-8 sequences with U+FFFD.
pub fn tokenize_bytes(path: &str, bytes: &[u8], profile: &LanguageProfile) -> TokenStream {
    let source = String::from_utf8_lossy(bytes);
    tokenize(path, &source, profile)
}

pub fn tokenize(path: &str, source: &str, profile: &LanguageProfile) -> TokenStream {
    let mut lexer = Lexer::new(source, profile);
    lexer.run();
    let line_count = if source.is_empty() {
        0
    } else {
        source.matches('\n').count() + usize::from(!source.ends_with('\n'))
    };
    TokenStream {
        path: path.to_string(),
        language: profile.language(),
        tokens: lexer.tokens,
        line_count,
        char_count: lexer.chars.len(),
        diagnostics: lexer.diagnostics,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ImportMode {
    Off,
    /// After `#include` on the current line.
    Include,
    /// After Java `import`, until `;` or end of line.
    JavaImport,
}

struct Lexer<'a> {
    source: &'a str,
    profile: &'a LanguageProfile,
    /// (byte offset, char) pairs.
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    column: usize,
    at_line_start: bool,
    import: ImportMode,
    tokens: Vec<Token>,
    diagnostics: Vec<Diagnostic>,
}

impl<'a> Lexer<'a> {
    fn new(source: &'a str, profile: &'a LanguageProfile) -> Self {
        Lexer {
            source,
            profile,
            chars: source.char_indices().collect(),
            pos: 0,
            line: 1,
            column: 1,
            at_line_start: true,
            import: ImportMode::Off,
            tokens: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).map(|&(_, c)| c)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.source[self.byte_at(self.pos)..].starts_with(s)
    }

    fn byte_at(&self, pos: usize) -> usize {
        self.chars.get(pos).map_or(self.source.len(), |&(b, _)| b)
    }

    fn is_cpp(&self) -> bool {
        self.profile.language() == Language::Cpp
    }

    /// Emits the token spanning `self.pos..end` (char indices) and advances.
    fn emit(&mut self, kind: TokenKind, end: usize) {
        let start = self.pos;
        let text = self.source[self.byte_at(start)..self.byte_at(end)].to_string();
        let token = Token {
            kind,
            text,
            line: self.line,
            column: self.column,
            offset: self.byte_at(start),
        };
        for &(_, c) in &self.chars[start..end] {
            if c == '\n' {
                self.line += 1;
                self.column = 1;
                self.at_line_start = true;
                if self.import == ImportMode::Include || self.import == ImportMode::JavaImport {
                    self.import = ImportMode::Off;
                }
            } else {
                self.column += 1;
                if !c.is_whitespace() {
                    self.at_line_start = false;
                }
            }
        }
        self.pos = end;
        self.tokens.push(token);
    }

    fn diagnose(&mut self, kind: DiagnosticKind, message: &str) {
        self.diagnostics.push(Diagnostic {
            kind,
            line: self.line,
            column: self.column,
            message: message.to_string(),
        });
    }

    fn run(&mut self) {
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos].1;
            if c.is_whitespace() {
                let mut end = self.pos;
                while end < self.chars.len() && self.chars[end].1.is_whitespace() {
                    end += 1;
                }
                self.emit(TokenKind::Whitespace, end);
            } else if self.starts_with(self.profile.line_comment()) {
                let end = self.find_line_end(self.pos);
                self.emit(TokenKind::Comment, end);
            } else if self.starts_with(self.profile.block_comment().0) {
                self.lex_block_comment();
            } else if c == '#' && self.is_cpp() && self.at_line_start {
                self.lex_directive();
            } else if self.import == ImportMode::Include && (c == '<' || c == '"') {
                self.lex_include_target(c);
            } else if self.import == ImportMode::JavaImport && is_ident_start(c) {
                self.lex_java_import_name();
            } else if self.profile.string_delimiters().contains(&c) {
                self.lex_string(self.pos);
            } else if c == '\'' {
                self.lex_char();
            } else if c.is_ascii_digit()
                || (c == '.' && self.peek(1).is_some_and(|n| n.is_ascii_digit()))
            {
                self.lex_number();
            } else if is_ident_start(c) {
                self.lex_word();
            } else {
                self.lex_punct();
            }
        }
    }

    fn find_line_end(&self, from: usize) -> usize {
        let mut end = from;
        while end < self.chars.len() && self.chars[end].1 != '\n' {
            end += 1;
        }
        end
    }

    fn lex_block_comment(&mut self) {
        let close = self.profile.block_comment().1;
        let open_len = self.profile.block_comment().0.chars().count();
        let start_byte = self.byte_at(self.pos + open_len);
        match self.source[start_byte..].find(close) {
            Some(rel) => {
                let end_byte = start_byte + rel + close.len();
                let end = self.char_index_of(end_byte);
                self.emit(TokenKind::Comment, end);
            }
            None => {
                self.diagnose(DiagnosticKind::UnterminatedComment, "unterminated block comment");
                self.emit(TokenKind::Comment, self.chars.len());
            }
        }
    }

    fn char_index_of(&self, byte: usize) -> usize {
        self.chars.partition_point(|&(b, _)| b < byte)
    }

    fn lex_directive(&mut self) {
        // `#`, optional horizontal space, directive name
        let mut i = self.pos + 1;
        while i < self.chars.len() && matches!(self.chars[i].1, ' ' | '\t') {
            i += 1;
        }
        let name_start = i;
        while i < self.chars.len() && is_ident_continue(self.chars[i].1) {
            i += 1;
        }
        let name = &self.source[self.byte_at(name_start)..self.byte_at(i)];
        if name == "include" {
            self.emit(TokenKind::Punctuation, i);
            self.import = ImportMode::Include;
            return;
        }
        // whole logical line, honouring backslash continuations
        let mut end = self.pos;
        loop {
            end = self.find_line_end(end);
            let continued = end > self.pos
                && self.chars[end - 1].1 == '\\'
                && end < self.chars.len();
            let continued_crlf = end > self.pos + 1
                && self.chars[end - 1].1 == '\r'
                && self.chars[end - 2].1 == '\\'
                && end < self.chars.len();
            if continued || continued_crlf {
                end += 1;
            } else {
                break;
            }
        }
        self.emit(TokenKind::Macro, end);
    }

    fn lex_include_target(&mut self, open: char) {
        let close = if open == '<' { '>' } else { '"' };
        self.emit(TokenKind::Punctuation, self.pos + 1);
        let mut end = self.pos;
        while end < self.chars.len() && self.chars[end].1 != close && self.chars[end].1 != '\n' {
            end += 1;
        }
        if end > self.pos {
            self.emit(TokenKind::ImportName, end);
        }
        if end < self.chars.len() && self.chars[end].1 == close {
            self.emit(TokenKind::Punctuation, end + 1);
        }
        self.import = ImportMode::Off;
    }

    fn lex_java_import_name(&mut self) {
        let mut end = self.pos;
        while end < self.chars.len() {
            let c = self.chars[end].1;
            if is_ident_continue(c) || c == '.' || c == '*' {
                end += 1;
            } else {
                break;
            }
        }
        let word = &self.source[self.byte_at(self.pos)..self.byte_at(end)];
        if word == "static" {
            self.emit(TokenKind::Keyword, end);
        } else {
            self.emit(TokenKind::ImportName, end);
            self.import = ImportMode::Off;
        }
    }

    /// `start` is where the literal begins (may include a prefix such as
    /// `u8`); `self.pos` is still at `start`.
    fn lex_string(&mut self, start: usize) {
        debug_assert_eq!(start, self.pos);
        let mut i = self.pos;
        while self.chars[i].1 != '"' {
            i += 1;
        }
        let prefix = &self.source[self.byte_at(start)..self.byte_at(i)];
        if prefix.ends_with('R') && self.is_cpp() {
            return self.lex_raw_string(i);
        }
        if !self.is_cpp() && self.source[self.byte_at(i)..].starts_with("\"\"\"") {
            return self.lex_text_block(i);
        }
        i += 1;
        while i < self.chars.len() {
            match self.chars[i].1 {
                '\\' => i += 2,
                '"' => {
                    self.emit(TokenKind::StringLiteral, i + 1);
                    return;
                }
                _ => i += 1,
            }
        }
        self.diagnose(DiagnosticKind::UnterminatedString, "unterminated string literal");
        self.emit(TokenKind::StringLiteral, self.chars.len());
    }

    fn lex_raw_string(&mut self, quote: usize) {
        // R"delim( ... )delim"
        let mut i = quote + 1;
        while i < self.chars.len() && self.chars[i].1 != '(' && self.chars[i].1 != '\n' {
            i += 1;
        }
        let delim = &self.source[self.byte_at(quote + 1)..self.byte_at(i)];
        let terminator = format!("){delim}\"");
        let body_start = self.byte_at((i + 1).min(self.chars.len()));
        match self.source[body_start..].find(&terminator) {
            Some(rel) => {
                let end = self.char_index_of(body_start + rel + terminator.len());
                self.emit(TokenKind::StringLiteral, end);
            }
            None => {
                self.diagnose(DiagnosticKind::UnterminatedString, "unterminated raw string literal");
                self.emit(TokenKind::StringLiteral, self.chars.len());
            }
        }
    }

    fn lex_text_block(&mut self, quote: usize) {
        let mut i = quote + 3;
        while i < self.chars.len() {
            if self.chars[i].1 == '\\' {
                i += 2;
                continue;
            }
            if self.source[self.byte_at(i)..].starts_with("\"\"\"") {
                self.emit(TokenKind::StringLiteral, i + 3);
                return;
            }
            i += 1;
        }
        self.diagnose(DiagnosticKind::UnterminatedString, "unterminated text block");
        self.emit(TokenKind::StringLiteral, self.chars.len());
    }

    fn lex_char(&mut self) {
        let mut i = self.pos + 1;
        while i < self.chars.len() {
            match self.chars[i].1 {
                '\\' => i += 2,
                '\'' => {
                    self.emit(TokenKind::Literal, i + 1);
                    return;
                }
                '\n' => break,
                _ => i += 1,
            }
        }
        let end = i.min(self.chars.len());
        self.diagnose(DiagnosticKind::UnterminatedChar, "unterminated character literal");
        self.emit(TokenKind::Literal, end);
    }

    fn lex_number(&mut self) {
        let start = self.pos;
        let hex = self.starts_with("0x") || self.starts_with("0X");
        let mut i = start;
        while i < self.chars.len() {
            let c = self.chars[i].1;
            let prev = if i > start { Some(self.chars[i - 1].1) } else { None };
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                i += 1;
            } else if (c == '+' || c == '-')
                && matches!(prev, Some('e' | 'E')) && !hex
                || (c == '+' || c == '-') && matches!(prev, Some('p' | 'P'))
            {
                i += 1;
            } else if c == '\''
                && self.is_cpp()
                && prev.is_some_and(|p| p.is_ascii_hexdigit())
                && self.chars.get(i + 1).is_some_and(|&(_, n)| n.is_ascii_hexdigit())
            {
                i += 1;
            } else {
                break;
            }
        }
        self.emit(TokenKind::Literal, i);
    }

    fn lex_word(&mut self) {
        let mut end = self.pos;
        while end < self.chars.len() && is_ident_continue(self.chars[end].1) {
            end += 1;
        }
        let word = &self.source[self.byte_at(self.pos)..self.byte_at(end)];
        let next = self.chars.get(end).map(|&(_, c)| c);
        if self.is_cpp() && next == Some('"') && CPP_STRING_PREFIXES.contains(&word) {
            self.lex_string(self.pos);
            return;
        }
        if self.import == ImportMode::Include {
            self.emit(TokenKind::ImportName, end);
            self.import = ImportMode::Off;
            return;
        }
        let kind = if LITERAL_WORDS.contains(&word) {
            TokenKind::Literal
        } else if self.profile.is_keyword(word) {
            TokenKind::Keyword
        } else {
            TokenKind::Identifier
        };
        let is_java_import = kind == TokenKind::Keyword
            && !self.is_cpp()
            && word == self.profile.import_marker();
        self.emit(kind, end);
        if is_java_import {
            self.import = ImportMode::JavaImport;
        }
    }

    fn lex_punct(&mut self) {
        let rest = &self.source[self.byte_at(self.pos)..];
        let len = OPERATORS
            .iter()
            .find(|op| rest.starts_with(**op))
            .map_or(1, |op| op.len());
        let is_semicolon = rest.starts_with(';');
        self.emit(TokenKind::Punctuation, self.pos + len);
        if is_semicolon && self.import == ImportMode::JavaImport {
            self.import = ImportMode::Off;
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// Splits an identifier into lowercase subwords at camelCase, underscore and
/// letter/digit boundaries. `parseHTTPRequest2` gives
/// `[parse, http, request, 2]`.
pub fn split_identifier(word: &str) -> Vec<String> {
    #[derive(PartialEq, Clone, Copy)]
    enum Class {
        Lower,
        Upper,
        Digit,
    }
    let classify = |c: char| {
        if c.is_numeric() {
            Class::Digit
        } else if c.is_uppercase() {
            Class::Upper
        } else {
            Class::Lower
        }
    };

    let mut parts = Vec::new();
    let mut current: Vec<char> = Vec::new();
    let chars: Vec<char> = word.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            flush(&mut parts, &mut current);
            continue;
        }
        if let Some(&prev) = current.last() {
            let (pc, cc) = (classify(prev), classify(c));
            let next_lower = chars
                .get(i + 1)
                .is_some_and(|&n| n.is_alphanumeric() && classify(n) == Class::Lower);
            let boundary = match (pc, cc) {
                (Class::Digit, Class::Digit) => false,
                (Class::Digit, _) | (_, Class::Digit) => true,
                (Class::Lower, Class::Upper) => true,
                // acronym end: the last capital of "HTTPServer" starts "Server"
                (Class::Upper, Class::Upper) => next_lower,
                _ => false,
            };
            if boundary {
                flush(&mut parts, &mut current);
            }
        }
        current.push(c);
    }
    flush(&mut parts, &mut current);
    parts
}

fn flush(parts: &mut Vec<String>, current: &mut Vec<char>) {
    if !current.is_empty() {
        let word: String = current.drain(..).collect();
        parts.push(word.to_lowercase());
    }
}
