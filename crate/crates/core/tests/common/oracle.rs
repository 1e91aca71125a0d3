//! Brute-force reference computations for the golden corpus.
//!
//! Nothing here calls into the library's tokenizer, lexical, layout or
//! syntax code. Tokens come from anchored regular expressions, keyword sets
//! are read straight from the profile files, lines come from `str::lines`,
//! and tree metrics are counted on hand-written trees.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Space,
    Comment,
    Str,
    Lit,
    Keyword,
    Ident,
    Import,
    Punct,
    Macro,
}

#[derive(Debug, Clone)]
pub struct Tok {
    pub kind: Kind,
    pub text: String,
    pub start: usize,
}

pub fn keywords(lang: &str) -> BTreeSet<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("profiles/{lang}.keywords"));
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split('#').next().unwrap().trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

const OPS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->*", "::", "->", "++", "--", "<<", ">>", "<=", ">=",
    "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
];

struct Patterns {
    space: Regex,
    include: Regex,
    directive: Regex,
    line_comment: Regex,
    block_comment: Regex,
    text_block: Regex,
    raw_string: Regex,
    string: Regex,
    chr: Regex,
    number: Regex,
    word: Regex,
    java_import: Regex,
    include_target: Regex,
}

impl Patterns {
    fn new() -> Self {
        let r = |p: &str| Regex::new(p).unwrap();
        Patterns {
            space: r(r"^\s+"),
            include: r(r"^#[ \t]*include"),
            directive: r(r"^#(?:\\\n|[^\n])*"),
            line_comment: r(r"^//[^\n]*"),
            block_comment: r(r"^/\*(?s:.*?)\*/"),
            text_block: r(r#"^"""(?s:.*?)""""#),
            raw_string: r(r#"^(?:u8|[LuU])?R"\((?s:.*?)\)""#),
            string: r(r#"^(?:u8|[LuU])?"(?:[^"\\\n]|\\.)*""#),
            chr: r(r"^'(?:[^'\\\n]|\\.)*'"),
            number: r(r"^[0-9](?:[eE][+-]|[A-Za-z0-9_.'])*"),
            word: r(r"^[A-Za-z_$][A-Za-z0-9_$]*"),
            java_import: r(r"^[A-Za-z0-9_$]+(?:\.(?:[A-Za-z0-9_$]+|\*))*"),
            include_target: r(r#"^[^>"\n]+"#),
        }
    }
}

pub fn lex(src: &str, lang: &str) -> Vec<Tok> {
    let p = Patterns::new();
    let kw = keywords(lang);
    let cpp = lang == "cpp";
    let mut toks: Vec<Tok> = Vec::new();
    let mut pos = 0;
    let mut after_import = false;
    let mut include_target = false;
    while pos < src.len() {
        let rest = &src[pos..];
        let line_start = src[..pos].rsplit('\n').next().unwrap().trim().is_empty();
        let push = |kind: Kind, len: usize, toks: &mut Vec<Tok>| {
            toks.push(Tok { kind, text: rest[..len].to_string(), start: pos });
            len
        };
        let len = if let Some(m) = p.space.find(rest) {
            push(Kind::Space, m.end(), &mut toks)
        } else if include_target && (rest.starts_with('<') || rest.starts_with('"')) {
            let n = push(Kind::Punct, 1, &mut toks);
            let m = p.include_target.find(&rest[1..]).unwrap();
            toks.push(Tok { kind: Kind::Import, text: m.as_str().to_string(), start: pos + 1 });
            toks.push(Tok { kind: Kind::Punct, text: rest[1 + m.end()..2 + m.end()].to_string(), start: pos + 1 + m.end() });
            include_target = false;
            n + m.end() + 1
        } else if cpp && line_start && rest.starts_with('#') {
            if let Some(m) = p.include.find(rest) {
                include_target = true;
                push(Kind::Punct, m.end(), &mut toks)
            } else {
                push(Kind::Macro, p.directive.find(rest).unwrap().end(), &mut toks)
            }
        } else if let Some(m) = p.line_comment.find(rest).or_else(|| p.block_comment.find(rest)) {
            push(Kind::Comment, m.end(), &mut toks)
        } else if let Some(m) = (!cpp).then(|| p.text_block.find(rest)).flatten() {
            push(Kind::Str, m.end(), &mut toks)
        } else if let Some(m) = cpp.then(|| p.raw_string.find(rest)).flatten() {
            push(Kind::Str, m.end(), &mut toks)
        } else if let Some(m) = p.string.find(rest).filter(|m| cpp || m.as_str().starts_with('"')) {
            push(Kind::Str, m.end(), &mut toks)
        } else if let Some(m) = p.chr.find(rest).or_else(|| p.number.find(rest)) {
            push(Kind::Lit, m.end(), &mut toks)
        } else if let Some(m) = after_import.then(|| p.java_import.find(rest)).flatten() {
            if m.as_str() == "static" {
                push(Kind::Keyword, m.end(), &mut toks)
            } else {
                after_import = false;
                push(Kind::Import, m.end(), &mut toks)
            }
        } else if let Some(m) = p.word.find(rest) {
            let w = m.as_str();
            let kind = if matches!(w, "true" | "false" | "null" | "nullptr") {
                Kind::Lit
            } else if kw.contains(w) {
                Kind::Keyword
            } else {
                Kind::Ident
            };
            after_import = !cpp && w == "import";
            push(kind, m.end(), &mut toks)
        } else {
            let n = OPS
                .iter()
                .find(|op| rest.starts_with(**op))
                .map_or_else(|| rest.chars().next().unwrap().len_utf8(), |op| op.len());
            push(Kind::Punct, n, &mut toks)
        };
        pos += len;
    }
    toks
}

/// Subwords: case transitions, acronym ends and digit runs become spaces.
pub fn subwords(text: &str) -> Vec<String> {
    let lower_upper = Regex::new(r"([a-z])([A-Z])").unwrap();
    let acronym = Regex::new(r"([A-Z])([A-Z][a-z])").unwrap();
    let digit_after = Regex::new(r"([^0-9])([0-9])").unwrap();
    let digit_before = Regex::new(r"([0-9])([^0-9])").unwrap();
    let mut s = text.to_string();
    for re in [&lower_upper, &acronym, &digit_after, &digit_before] {
        s = re.replace_all(&s, "$1 $2").into_owned();
    }
    s.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn string_contents(text: &str) -> String {
    let quote = text.find('"').unwrap();
    let body = &text[quote..];
    if text[..quote].ends_with('R') {
        return body[2..body.len() - 2].to_string();
    }
    let inner = if body.starts_with("\"\"\"") {
        &body[3..body.len() - 3]
    } else {
        &body[1..body.len() - 1]
    };
    Regex::new(r"\\.").unwrap().replace_all(inner, " ").into_owned()
}

fn comment_contents(text: &str) -> &str {
    if let Some(rest) = text.strip_prefix("//") {
        rest
    } else {
        &text[2..text.len() - 2]
    }
}

pub type Tf = BTreeMap<String, f64>;

fn tf(words: Vec<String>) -> Tf {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for w in &words {
        *counts.entry(w.clone()).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(w, c)| (w, c as f64 / words.len() as f64))
        .collect()
}

/// `[comments_strings, identifiers, keywords, imports]`.
pub fn term_frequencies(toks: &[Tok]) -> [Tf; 4] {
    let mut text = Vec::new();
    let mut idents = Vec::new();
    let mut kws = Vec::new();
    let mut imports = Vec::new();
    for t in toks {
        match t.kind {
            Kind::Comment => text.extend(subwords(comment_contents(&t.text))),
            Kind::Str => text.extend(subwords(&string_contents(&t.text))),
            Kind::Ident => idents.extend(subwords(&t.text)),
            Kind::Keyword => kws.push(t.text.clone()),
            Kind::Import => imports.push(t.text.trim().to_lowercase()),
            _ => {}
        }
    }
    [tf(text), tf(idents), tf(kws), tf(imports)]
}

pub struct Layout {
    pub scalars: [f64; 17],
    pub histogram: [f64; 16],
}

fn density(count: usize, lines: usize) -> f64 {
    ((count as f64 + 1.0) / (lines as f64 + 1.0)).ln()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn layout(src: &str, toks: &[Tok], functions: usize) -> Layout {
    let lines: Vec<&str> = src.lines().collect();
    let n = lines.len();
    let sig: Vec<&Tok> = toks.iter().filter(|t| t.kind != Kind::Space).collect();
    let count = |k: Kind| sig.iter().filter(|t| t.kind == k).count();
    let is = |i: usize, k: Kind, s: &str| sig[i].kind == k && sig[i].text == s;

    let control = (0..sig.len())
        .filter(|&i| {
            let t = sig[i];
            t.kind == Kind::Keyword
                && ["do", "if", "else", "switch", "for", "while"].contains(&t.text.as_str())
                && !(t.text == "if" && i > 0 && is(i - 1, Kind::Keyword, "else"))
        })
        .count();
    let ternary = (0..sig.len())
        .filter(|&i| is(i, Kind::Punct, "?") && !(i > 0 && (is(i - 1, Kind::Punct, "<") || is(i - 1, Kind::Punct, ","))))
        .count();

    let lengths: Vec<f64> = lines.iter().map(|l| l.chars().count() as f64).collect();
    let avg = mean(&lengths);
    let sd = mean(&lengths.iter().map(|l| (l - avg) * (l - avg)).collect::<Vec<_>>()).sqrt();

    let ws = src.chars().filter(|c| c.is_whitespace()).count();
    let non_ws = src.chars().count() - ws;

    let braces: Vec<&Tok> = sig.iter().copied().filter(|t| t.kind == Kind::Punct && t.text == "{").collect();
    let opening_line = braces
        .iter()
        .filter(|b| {
            let before = &src[..b.start];
            let gap = &before[before.trim_end().len()..];
            gap.len() == before.len() || gap.contains('\n')
        })
        .count();

    let code_lines: Vec<&str> = lines.iter().copied().filter(|l| !l.trim().is_empty()).collect();
    let indents: Vec<f64> = code_lines
        .iter()
        .map(|l| (l.len() - l.trim_start_matches([' ', '\t']).len()) as f64)
        .collect();
    let indented = indents.iter().filter(|&&w| w > 0.0).count();
    let tab_led = code_lines.iter().filter(|l| l.starts_with('\t')).count();

    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut histogram = [0.0; 16];
    for l in &lengths {
        histogram[((*l as usize) / 10).min(15)] += 1.0 / n as f64;
    }

    Layout {
        scalars: [
            density(control, n),
            density(ternary, n),
            density(sig.len(), n),
            density(count(Kind::Comment), n),
            density(count(Kind::Lit) + count(Kind::Str), n),
            density(count(Kind::Keyword), n),
            density(functions, n),
            density(count(Kind::Macro), n),
            density(src.matches('\t').count(), n),
            density(src.matches(' ').count(), n),
            density(n - code_lines.len(), n),
            avg,
            sd,
            ratio(ws, non_ws),
            ratio(opening_line, braces.len()),
            ratio(tab_led, indented),
            mean(&indents),
        ],
        histogram,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub children: Vec<Node>,
}

impl Node {
    pub fn sexpr(&self) -> String {
        if self.children.is_empty() {
            self.name.clone()
        } else {
            let inner: Vec<String> = self.children.iter().map(Node::sexpr).collect();
            format!("{}({})", self.name, inner.join(" "))
        }
    }
}

/// Reads `Name(Child Child(...))` with arbitrary whitespace.
pub fn parse_tree(text: &str) -> Node {
    let atoms: Vec<String> = Regex::new(r"[A-Za-z]+|[()]")
        .unwrap()
        .find_iter(text)
        .map(|m| m.as_str().to_string())
        .collect();
    fn node(atoms: &[String], i: &mut usize) -> Node {
        let name = atoms[*i].clone();
        *i += 1;
        let mut children = Vec::new();
        if atoms.get(*i).map(String::as_str) == Some("(") {
            *i += 1;
            while atoms[*i] != ")" {
                children.push(node(atoms, i));
            }
            *i += 1;
        }
        Node { name, children }
    }
    let mut i = 0;
    let root = node(&atoms, &mut i);
    assert_eq!(i, atoms.len(), "trailing input in tree");
    root
}

pub struct Syntax {
    pub max_nesting: usize,
    pub branching: f64,
    pub functions: usize,
    pub avg_params: f64,
    pub params_sd: f64,
    pub max_depth: usize,
    pub avg_leaf_depth: f64,
    pub depth_by_type: BTreeMap<String, f64>,
    pub bigrams: BTreeMap<String, f64>,
    pub keywords: Tf,
}

pub fn syntax(root: &Node, toks: &[Tok]) -> Syntax {
    // (node, depth, parent name) for every node
    let mut all: Vec<(&Node, usize, Option<&str>)> = Vec::new();
    let mut stack = vec![(root, 1usize, None)];
    while let Some((n, d, parent)) = stack.pop() {
        all.push((n, d, parent));
        for c in &n.children {
            stack.push((c, d + 1, Some(n.name.as_str())));
        }
    }

    let mut by_type: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (n, d, _) in &all {
        by_type.entry(n.name.clone()).or_default().push(*d as f64);
    }
    let leaves: Vec<f64> = all.iter().filter(|(n, _, _)| n.children.is_empty()).map(|(_, d, _)| *d as f64).collect();
    let blocks: Vec<f64> = all
        .iter()
        .filter(|(n, _, _)| n.name == "Block")
        .map(|(n, _, _)| n.children.len() as f64)
        .collect();
    let params: Vec<f64> = all
        .iter()
        .filter(|(n, _, _)| n.name == "Function")
        .map(|(n, _, _)| {
            n.children
                .iter()
                .find(|c| c.name == "ParameterList")
                .map_or(0, |pl| pl.children.len()) as f64
        })
        .collect();
    let avg_params = mean(&params);
    let params_sd = mean(&params.iter().map(|p| (p - avg_params).powi(2)).collect::<Vec<_>>()).sqrt();

    let edges: Vec<String> = all
        .iter()
        .filter_map(|(n, _, p)| p.map(|p| format!("{p}>{}", n.name)))
        .collect();
    let kws: Vec<String> = toks.iter().filter(|t| t.kind == Kind::Keyword).map(|t| t.text.clone()).collect();

    Syntax {
        max_nesting: nesting(root, false),
        branching: mean(&blocks),
        functions: params.len(),
        avg_params,
        params_sd,
        max_depth: all.iter().map(|(_, d, _)| *d).max().unwrap(),
        avg_leaf_depth: mean(&leaves),
        depth_by_type: by_type.into_iter().map(|(k, v)| (k, mean(&v))).collect(),
        bigrams: tf(edges),
        keywords: tf(kws),
    }
}

fn nesting(n: &Node, under_else: bool) -> usize {
    let control = ["If", "Switch", "For", "While", "DoWhile"].contains(&n.name.as_str());
    let own = usize::from(control && !(under_else && n.name == "If"));
    own + n.children.iter().map(|c| nesting(c, n.name == "Else")).max().unwrap_or(0)
}

pub struct GoldenFile {
    pub path: PathBuf,
    pub lang: &'static str,
    pub source: String,
    pub tree: Node,
}

pub fn golden_corpus() -> Vec<GoldenFile> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut out = Vec::new();
    for (dir, ext, lang) in [("cpp", "cpp", "cpp"), ("java", "java", "java")] {
        let mut paths: Vec<PathBuf> = fs::read_dir(root.join(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == ext))
            .collect();
        paths.sort();
        for path in paths {
            let source = fs::read_to_string(&path).unwrap();
            let tree = parse_tree(&fs::read_to_string(path.with_extension("tree")).unwrap());
            out.push(GoldenFile { path, lang, source, tree });
        }
    }
    out
}
