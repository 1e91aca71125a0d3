//! Two-style synthetic corpus generator.
//!
//! Human-labelled files use tab indentation, no comments and one or two
//! character identifiers. LLM-labelled files use four-space indentation,
//! comment at least 15% of their lines and use multi-word identifiers.
//! Program structure is drawn from the same distribution for both classes.

use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::features::Label;
use crate::profile::Language;

pub const MIN_COMMENT_LINE_RATIO: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFile {
    /// `human/0000.cpp` style path, relative to the corpus root.
    pub relative: String,
    pub label: Label,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Style {
    Terse,
    Verbose,
}

const SHORT_NAMES: &[&str] = &[
    "a", "b", "c", "d", "e", "g", "h", "i", "j", "k", "m", "n", "p", "q", "r", "s", "t", "u", "v", "w", "x", "y", "z",
    "ab", "cn", "dp", "nx", "mx", "mn", "sm", "tp", "lo", "hi", "id", "ok", "pw", "qq", "rs", "vv", "xs",
];

const WORDS: &[&str] = &[
    "total", "count", "index", "result", "value", "current", "max", "min", "sum", "left", "right", "buffer", "item",
    "element", "offset", "length", "target", "next", "prev", "step", "limit", "score", "node", "range", "delta",
];

const FN_VERBS: &[&str] = &["compute", "find", "calculate", "update", "process", "build", "check", "evaluate"];

const COMMENTS: &[&str] = &[
    "Initialize the accumulator",
    "Iterate over the input range",
    "Check the boundary condition",
    "Update the running total",
    "Return the computed result",
    "Handle the edge case",
    "Store the intermediate value",
    "Compute the next state",
    "Read the input values",
    "Print the final answer",
    "Helper function for the main computation",
    "Keep track of the best value so far",
];

enum Stmt {
    Decl(String, String),
    Assign(String, String),
    If(String, Vec<Stmt>, Vec<Stmt>),
    For(String, String, Vec<Stmt>),
    While(String, Vec<Stmt>),
    Print(String),
    Return(String),
}

struct Func {
    name: String,
    params: Vec<String>,
    body: Vec<Stmt>,
}

struct Namer<'a> {
    style: Style,
    rng: &'a mut ChaCha8Rng,
    used: Vec<String>,
}

impl Namer<'_> {
    fn fresh(&mut self) -> String {
        for attempt in 0.. {
            let name = match self.style {
                Style::Terse => SHORT_NAMES.choose(self.rng).unwrap().to_string(),
                Style::Verbose => {
                    let n = self.rng.gen_range(2..=3);
                    let mut s = String::new();
                    for k in 0..n {
                        let w = WORDS.choose(self.rng).unwrap();
                        if k == 0 {
                            s.push_str(w);
                        } else {
                            s.push_str(&w[..1].to_ascii_uppercase());
                            s.push_str(&w[1..]);
                        }
                    }
                    s
                }
            };
            if !self.used.contains(&name) || attempt > 50 {
                self.used.push(name.clone());
                return name;
            }
        }
        unreachable!()
    }

    fn function(&mut self) -> String {
        match self.style {
            Style::Terse => {
                let pool = ["f", "g", "go", "fn", "sv", "ck", "dfs", "calc"];
                let base = pool.choose(self.rng).unwrap();
                let name = if self.used.iter().any(|u| u == base) {
                    format!("{}{}", &base[..1], self.used.len() % 10)
                } else {
                    base.to_string()
                };
                self.used.push(name.clone());
                name
            }
            Style::Verbose => {
                let verb = FN_VERBS.choose(self.rng).unwrap();
                let w = self.fresh();
                let name = format!("{verb}{}{}", w[..1].to_ascii_uppercase(), &w[1..]);
                self.used.push(name.clone());
                name
            }
        }
    }
}

fn expr(rng: &mut ChaCha8Rng, vars: &[String], depth: usize) -> String {
    if depth == 0 || vars.is_empty() || rng.gen_bool(0.4) {
        if !vars.is_empty() && rng.gen_bool(0.7) {
            return vars.choose(rng).unwrap().clone();
        }
        return rng.gen_range(0..100).to_string();
    }
    let op = ["+", "-", "*", "%", "/"].choose(rng).unwrap();
    let l = expr(rng, vars, depth - 1);
    let r = expr(rng, vars, depth - 1);
    if rng.gen_bool(0.3) {
        format!("({l} {op} {r})")
    } else {
        format!("{l} {op} {r}")
    }
}

fn cond(rng: &mut ChaCha8Rng, vars: &[String]) -> String {
    let op = ["<", ">", "<=", ">=", "==", "!="].choose(rng).unwrap();
    format!("{} {op} {}", expr(rng, vars, 1), expr(rng, vars, 1))
}

fn block(rng: &mut ChaCha8Rng, namer_vars: &mut Vec<String>, namer: &mut Namer, depth: usize, len: usize) -> Vec<Stmt> {
    let mut out = Vec::new();
    let scope = namer_vars.len();
    for _ in 0..len {
        let pick = if depth == 0 { rng.gen_range(0..3) } else { rng.gen_range(0..7) };
        let s = match pick {
            0 | 1 => {
                let e = expr(rng, namer_vars, 2);
                let v = namer.fresh();
                namer_vars.push(v.clone());
                Stmt::Decl(v, e)
            }
            2 if !namer_vars.is_empty() => {
                let v = namer_vars.choose(rng).unwrap().clone();
                Stmt::Assign(v, expr(rng, namer_vars, 2))
            }
            2 => Stmt::Print(expr(rng, namer_vars, 1)),
            3 => {
                let c = cond(rng, namer_vars);
                let n = rng.gen_range(1..=2);
                let t = block(rng, namer_vars, namer, depth - 1, n);
                let e = if rng.gen_bool(0.4) {
                    block(rng, namer_vars, namer, depth - 1, 1)
                } else {
                    Vec::new()
                };
                Stmt::If(c, t, e)
            }
            4 => {
                let v = namer.fresh();
                let bound = expr(rng, namer_vars, 1);
                namer_vars.push(v.clone());
                let n = rng.gen_range(1..=2);
                let body = block(rng, namer_vars, namer, depth - 1, n);
                namer_vars.retain(|x| x != &v);
                Stmt::For(v, bound, body)
            }
            5 => {
                let c = cond(rng, namer_vars);
                let body = block(rng, namer_vars, namer, depth - 1, 1);
                Stmt::While(c, body)
            }
            _ => Stmt::Print(expr(rng, namer_vars, 1)),
        };
        out.push(s);
    }
    namer_vars.truncate(scope);
    out
}

struct Writer<'a> {
    style: Style,
    rng: &'a mut ChaCha8Rng,
    lang: Language,
    lines: Vec<String>,
    comment_lines: usize,
}

impl Writer<'_> {
    fn indent(&self, level: usize) -> String {
        match self.style {
            Style::Terse => "\t".repeat(level),
            Style::Verbose => "    ".repeat(level),
        }
    }

    fn line(&mut self, level: usize, text: impl AsRef<str>) {
        let l = format!("{}{}", self.indent(level), text.as_ref());
        self.lines.push(l);
    }

    fn maybe_comment(&mut self, level: usize, p: f64) {
        if self.style == Style::Verbose && self.rng.gen_bool(p) {
            let c = COMMENTS.choose(self.rng).unwrap();
            self.line(level, format!("// {c}"));
            self.comment_lines += 1;
        }
    }

    fn print_call(&self, e: &str) -> String {
        match self.lang {
            Language::Cpp => format!("cout << {e} << endl;"),
            Language::Java => format!("System.out.println({e});"),
        }
    }

    fn stmts(&mut self, level: usize, body: &[Stmt]) {
        for s in body {
            self.maybe_comment(level, 0.45);
            match s {
                Stmt::Decl(v, e) => self.line(level, format!("int {v} = {e};")),
                Stmt::Assign(v, e) => self.line(level, format!("{v} = {e};")),
                Stmt::Print(e) => {
                    let p = self.print_call(e);
                    self.line(level, p)
                }
                Stmt::Return(e) => self.line(level, format!("return {e};")),
                Stmt::If(c, t, e) => {
                    self.line(level, format!("if ({c}) {{"));
                    self.stmts(level + 1, t);
                    if e.is_empty() {
                        self.line(level, "}");
                    } else {
                        self.line(level, "} else {");
                        self.stmts(level + 1, e);
                        self.line(level, "}");
                    }
                }
                Stmt::For(v, b, body) => {
                    self.line(level, format!("for (int {v} = 0; {v} < {b}; {v}++) {{"));
                    self.stmts(level + 1, body);
                    self.line(level, "}");
                }
                Stmt::While(c, body) => {
                    self.line(level, format!("while ({c}) {{"));
                    self.stmts(level + 1, body);
                    self.line(level + 1, "break;");
                    self.line(level, "}");
                }
            }
        }
    }

    fn func(&mut self, level: usize, f: &Func, is_static: bool) {
        let params: Vec<String> = f.params.iter().map(|p| format!("int {p}")).collect();
        self.maybe_comment(level, 0.9);
        let prefix = if is_static { "static " } else { "" };
        self.line(level, format!("{prefix}int {}({}) {{", f.name, params.join(", ")));
        self.stmts(level + 1, &f.body);
        self.line(level, "}");
        self.lines.push(String::new());
    }
}

fn program(lang: Language, style: Style, rng: &mut ChaCha8Rng) -> String {
    let mut name_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    let mut names = Namer {
        style,
        rng: &mut name_rng,
        used: Vec::new(),
    };
    let mut funcs = Vec::new();
    let mut body_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    for _ in 0..rng.gen_range(1..=3) {
        let name = names.function();
        let params: Vec<String> = (0..rng.gen_range(0..=3)).map(|_| names.fresh()).collect();
        let mut vars = params.clone();
        let len = rng.gen_range(2..=5);
        let mut body = block(&mut body_rng, &mut vars, &mut names, 2, len);
        body.push(Stmt::Return(expr(rng, &vars, 1)));
        funcs.push(Func { name, params, body });
    }
    let mut vars = Vec::new();
    let len = rng.gen_range(2..=5);
    let mut main_body = block(&mut body_rng, &mut vars, &mut names, 2, len);
    let calls: Vec<String> = funcs
        .iter()
        .map(|f| {
            let args: Vec<String> = f.params.iter().map(|_| expr(rng, &vars, 0)).collect();
            format!("{}({})", f.name, args.join(", "))
        })
        .collect();
    for c in calls {
        main_body.push(Stmt::Print(c));
    }
    main_body.push(Stmt::Return("0".into()));

    let mut w = Writer {
        style,
        rng,
        lang,
        lines: Vec::new(),
        comment_lines: 0,
    };
    match lang {
        Language::Cpp => {
            w.line(0, "#include <iostream>");
            w.line(0, "using namespace std;");
            w.lines.push(String::new());
            for f in &funcs {
                w.func(0, f, false);
            }
            w.line(0, "int main() {");
            w.stmts(1, &main_body);
            w.line(0, "}");
        }
        Language::Java => {
            w.line(0, "import java.util.*;");
            w.lines.push(String::new());
            w.maybe_comment(0, 0.9);
            w.line(0, "public class Main {");
            for f in &funcs {
                w.func(1, f, true);
            }
            w.line(1, "public static void main(String[] args) {");
            // `return 0` has no place in a void method
            main_body.pop();
            w.stmts(2, &main_body);
            w.line(1, "}");
            w.line(0, "}");
        }
    }
    if style == Style::Verbose {
        // pad with a header block until the ratio holds
        let mut header = Vec::new();
        while ((w.comment_lines + header.len()) as f64) < MIN_COMMENT_LINE_RATIO * (w.lines.len() + header.len()) as f64 {
            header.push(format!("// {}", COMMENTS.choose(w.rng).unwrap()));
        }
        header.append(&mut w.lines);
        w.lines = header;
    }
    let mut s = w.lines.join("\n");
    s.push('\n');
    s
}

/// `per_class` files of each style, human files first.
pub fn generate(language: Language, per_class: usize, seed: u64) -> Vec<SyntheticFile> {
    let ext = language.extensions()[0];
    let mut out = Vec::with_capacity(2 * per_class);
    for (label, style, dir) in [(Label::Human, Style::Terse, "human"), (Label::Llm, Style::Verbose, "llm")] {
        for i in 0..per_class {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((label == Label::Llm) as u64) << 32 | i as u64);
            out.push(SyntheticFile {
                relative: format!("{dir}/{i:04}.{ext}"),
                label,
                source: program(language, style, &mut rng),
            });
        }
    }
    out
}

pub fn write_corpus(root: &Path, files: &[SyntheticFile]) -> io::Result<()> {
    for f in files {
        let path = root.join(&f.relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, &f.source)?;
    }
    Ok(())
}
