use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::lexical::{Category, LexicalProfile};

pub const RELATIVE_DIFF_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqDiffRow {
    pub token: String,
    pub category: Category,
    pub freq_a: f64,
    pub freq_b: f64,
    pub relative_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqDiffReport {
    pub category: Category,
    pub files_a: usize,
    pub files_b: usize,
    pub rows: Vec<FreqDiffRow>,
}

/// Mean per-file TF of every token, over files where the category is not
/// empty. Returns the number of such files too.
pub fn corpus_frequencies<'a>(
    corpus: impl IntoIterator<Item = &'a LexicalProfile>,
    category: Category,
) -> (BTreeMap<String, f64>, usize) {
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    let mut files = 0usize;
    for p in corpus {
        let counts = p.category(category);
        if counts.is_empty() {
            continue;
        }
        files += 1;
        for (word, tf) in counts.tf_map() {
            *sums.entry(word).or_insert(0.0) += tf;
        }
    }
    if files > 0 {
        sums.values_mut().for_each(|v| *v /= files as f64);
    }
    (sums, files)
}

/// `|a - b| / max(a, b)`; 0 when both are 0.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m <= 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Tokens whose corpus frequencies differ by more than half, largest
/// difference first, ties by token.
pub fn freq_diff(a: &[&LexicalProfile], b: &[&LexicalProfile], category: Category) -> Result<FreqDiffReport, EvalError> {
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let (fa, files_a) = corpus_frequencies(a.iter().copied(), category);
    let (fb, files_b) = corpus_frequencies(b.iter().copied(), category);
    let mut tokens: Vec<&String> = fa.keys().chain(fb.keys()).collect();
    tokens.sort();
    tokens.dedup();
    let mut rows: Vec<FreqDiffRow> = tokens
        .into_iter()
        .map(|t| {
            let x = fa.get(t).copied().unwrap_or(0.0);
            let y = fb.get(t).copied().unwrap_or(0.0);
            FreqDiffRow {
                token: t.clone(),
                category,
                freq_a: x,
                freq_b: y,
                relative_difference: relative_difference(x, y),
            }
        })
        .filter(|r| r.relative_difference > RELATIVE_DIFF_THRESHOLD)
        .collect();
    rows.sort_by(|p, q| {
        q.relative_difference
            .total_cmp(&p.relative_difference)
            .then_with(|| p.token.cmp(&q.token))
    });
    Ok(FreqDiffReport {
        category,
        files_a,
        files_b,
        rows,
    })
}

impl FreqDiffReport {
    pub fn write_csv(&self, out: impl Write) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["token", "category", "freq_a", "freq_b", "relative_difference"])?;
        for r in &self.rows {
            w.write_record([
                r.token.clone(),
                r.category.id().to_string(),
                format!("{}", r.freq_a),
                format!("{}", r.freq_b),
                format!("{}", r.relative_difference),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_table(&self, label_a: &str, label_b: &str) -> String {
        let tok_w = self.rows.iter().map(|r| r.token.chars().count()).max().unwrap_or(0).max(5);
        let mut out = format!(
            "{:tok_w$}  {:>10}  {:>10}  {:>8}\n",
            "token", label_a, label_b, "rel.diff"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:tok_w$}  {:>10.6}  {:>10.6}  {:>8.4}\n",
                r.token, r.freq_a, r.freq_b, r.relative_difference
            ));
        }
        out
    }
}
