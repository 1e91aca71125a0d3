#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;

use codeorigin::extract::extract_source;
use codeorigin::layout::LayoutMetrics;
use codeorigin::{parse_syntax, tokenize, Category, Label, Language, LanguageProfile, NodeType};

pub const TOLERANCE: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOLERANCE
}

fn compare_maps(what: &str, got: &BTreeMap<String, f64>, want: &BTreeMap<String, f64>, out: &mut Vec<String>) {
    let keys: std::collections::BTreeSet<&String> = got.keys().chain(want.keys()).collect();
    for k in keys {
        let (g, w) = (got.get(k), want.get(k));
        match (g, w) {
            (Some(g), Some(w)) if close(*g, *w) => {}
            _ => out.push(format!("{what}[{k}]: extracted {g:?}, oracle {w:?}")),
        }
    }
}

fn compare(what: &str, got: f64, want: f64, out: &mut Vec<String>) {
    if !close(got, want) {
        out.push(format!("{what}: extracted {got}, oracle {want}"));
    }
}

/// Every disagreement between extraction and the oracle for one file.
pub fn golden_mismatches(file: &oracle::GoldenFile) -> Vec<String> {
    let language = if file.lang == "cpp" { Language::Cpp } else { Language::Java };
    let profile = LanguageProfile::builtin(language);
    let name = file.path.file_name().unwrap().to_string_lossy().into_owned();
    let mut out = Vec::new();

    let stream = tokenize(&name, &file.source, &profile);
    let parsed = parse_syntax(&stream).root.to_sexpr();
    if parsed != file.tree.sexpr() {
        out.push(format!("tree:\n  parsed {parsed}\n  hand   {}", file.tree.sexpr()));
    }

    let x = extract_source(&name, &file.source, &profile, Label::Unlabeled);
    let toks = oracle::lex(&file.source, file.lang);

    let tfs = oracle::term_frequencies(&toks);
    for (cat, want) in Category::ALL.iter().zip(&tfs) {
        compare_maps(cat.id(), &x.lexical.category(*cat).tf_map(), want, &mut out);
    }

    let syn = oracle::syntax(&file.tree, &toks);
    let lay = oracle::layout(&file.source, &toks, syn.functions);
    for ((field, got), want) in LayoutMetrics::SCALAR_NAMES.iter().zip(x.layout.scalars()).zip(lay.scalars) {
        compare(field, got, want, &mut out);
    }
    for (i, (got, want)) in x.layout.line_length_histogram.iter().zip(lay.histogram).enumerate() {
        compare(&format!("histogram[{i}]"), *got, want, &mut out);
    }

    let s = &x.syntax;
    compare("max_nesting_depth", s.max_nesting_depth as f64, syn.max_nesting as f64, &mut out);
    compare("avg_branching_factor", s.avg_branching_factor, syn.branching, &mut out);
    compare("function_count", s.function_count as f64, syn.functions as f64, &mut out);
    compare("avg_params_per_function", s.avg_params_per_function, syn.avg_params, &mut out);
    compare("param_count_stddev", s.param_count_stddev, syn.params_sd, &mut out);
    compare("max_ast_depth", s.max_ast_depth as f64, syn.max_depth as f64, &mut out);
    compare("avg_leaf_depth", s.avg_leaf_depth, syn.avg_leaf_depth, &mut out);
    for t in NodeType::ALL {
        let want = syn.depth_by_type.get(t.name()).copied().unwrap_or(0.0);
        compare(&format!("avg_depth[{}]", t.name()), s.avg_depth(t), want, &mut out);
    }
    compare_maps("bigram", &s.bigram_frequencies, &syn.bigrams, &mut out);
    compare_maps("keyword_freq", &s.keyword_frequencies, &syn.keywords, &mut out);
    out
}
