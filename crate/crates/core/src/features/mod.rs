//! Fixed-length feature vectors against a corpus vocabulary.
//!
//! A vector is laid out as lexical TF slots (one per vocabulary word, by
//! category), then the layout scalars and line-length histogram, then the
//! syntax scalars, per-type depths, node bigrams and keyword frequencies.
//! Every name is prefixed with `lex.`, `layout.` or `syntax.`.

mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::layout::{LayoutMetrics, HISTOGRAM_BINS};
use crate::lexical::{Category, LexicalProfile};
use crate::profile::{Language, LanguageProfile};
use crate::syntax::{bigram_key, NodeType, SyntaxMetrics};

pub use io::{
    read_csv, read_dataset, read_jsonl, read_vocabulary, write_csv, write_jsonl, write_vocabulary,
    DatasetFormat,
};

pub const VOCABULARY_VERSION: u32 = 1;
pub const DEFAULT_MIN_DOC_FREQ: usize = 2;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("min-doc-freq must be at least 1")]
    InvalidMinDocFreq,
    #[error("unknown label `{0}` (expected human, llm or unlabeled)")]
    UnknownLabel(String),
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    Llm,
    Unlabeled,
}

impl Label {
    pub fn id(self) -> &'static str {
        match self {
            Label::Human => "human",
            Label::Llm => "llm",
            Label::Unlabeled => "unlabeled",
        }
    }

    /// `llm` is the positive class.
    pub fn is_positive(self) -> bool {
        self == Label::Llm
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Label {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" => Ok(Label::Human),
            "llm" => Ok(Label::Llm),
            "unlabeled" | "" => Ok(Label::Unlabeled),
            other => Err(FeatureError::UnknownLabel(other.to_string())),
        }
    }
}

/// Everything measured on one file, before vocabulary projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedFile {
    pub path: String,
    pub language: Language,
    pub label: Label,
    pub lexical: LexicalProfile,
    pub layout: LayoutMetrics,
    pub syntax: SyntaxMetrics,
    pub diagnostics: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub word: String,
    pub doc_freq: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub version: u32,
    pub language: Language,
    pub min_doc_freq: usize,
    /// Indexed like [`Category::ALL`].
    pub categories: [Vec<VocabEntry>; 4],
    /// Keyword-frequency slots, sorted.
    pub keywords: Vec<String>,
}

impl Vocabulary {
    pub fn words(&self, category: Category) -> &[VocabEntry] {
        &self.categories[category_index(category)]
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for cat in Category::ALL {
            for entry in self.words(cat) {
                names.push(format!("lex.{}.{}", cat.id(), entry.word));
            }
        }
        for name in LayoutMetrics::SCALAR_NAMES {
            names.push(format!("layout.{name}"));
        }
        for k in 0..HISTOGRAM_BINS {
            names.push(format!("layout.line_length_hist.{k:02}"));
        }
        for name in SYNTAX_SCALARS {
            names.push(format!("syntax.{name}"));
        }
        for t in NodeType::ALL {
            names.push(format!("syntax.depth.{}", t.name()));
        }
        for p in NodeType::ALL {
            for c in NodeType::ALL {
                names.push(format!("syntax.bigram.{}", bigram_key(p, c)));
            }
        }
        for kw in &self.keywords {
            names.push(format!("syntax.keyword.{kw}"));
        }
        names
    }
}

fn category_index(category: Category) -> usize {
    Category::ALL.iter().position(|&c| c == category).unwrap()
}

const SYNTAX_SCALARS: [&str; 6] = [
    "max_nesting_depth",
    "avg_branching_factor",
    "avg_params_per_function",
    "param_count_stddev",
    "max_ast_depth",
    "avg_leaf_depth",
];

/// A word enters its category when at least `min_doc_freq` files use it.
/// Order: descending document frequency, then lexicographic.
pub fn build_vocabulary<'a>(
    corpus: impl IntoIterator<Item = &'a LexicalProfile>,
    min_doc_freq: usize,
    profile: &LanguageProfile,
) -> Result<Vocabulary, FeatureError> {
    if min_doc_freq == 0 {
        return Err(FeatureError::InvalidMinDocFreq);
    }
    let mut df: [BTreeMap<&str, usize>; 4] = Default::default();
    let mut files = 0usize;
    for lex in corpus {
        files += 1;
        for (k, cat) in Category::ALL.into_iter().enumerate() {
            for word in lex.category(cat).counts.keys() {
                *df[k].entry(word.as_str()).or_insert(0) += 1;
            }
        }
    }
    if files == 0 {
        return Err(FeatureError::EmptyCorpus);
    }
    let categories = df.map(|counts| {
        let mut entries: Vec<VocabEntry> = counts
            .into_iter()
            .filter(|&(_, n)| n >= min_doc_freq)
            .map(|(w, n)| VocabEntry {
                word: w.to_string(),
                doc_freq: n,
            })
            .collect();
        entries.sort_by(|a, b| b.doc_freq.cmp(&a.doc_freq).then_with(|| a.word.cmp(&b.word)));
        entries
    });
    Ok(Vocabulary {
        version: VOCABULARY_VERSION,
        language: profile.language(),
        min_doc_freq,
        categories,
        keywords: profile.keywords().iter().cloned().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub path: String,
    pub label: Label,
    pub names: Arc<[String]>,
    pub values: Vec<f64>,
}

/// Projects one file onto the vocabulary's schema. Out-of-vocabulary words
/// are dropped.
pub fn assemble(file: &ExtractedFile, vocab: &Vocabulary, names: &Arc<[String]>) -> FeatureVector {
    let mut values = Vec::with_capacity(names.len());
    for cat in Category::ALL {
        let counts = file.lexical.category(cat);
        for entry in vocab.words(cat) {
            values.push(counts.tf(&entry.word));
        }
    }
    values.extend(file.layout.scalars());
    values.extend(file.layout.line_length_histogram);
    let s = &file.syntax;
    values.extend([
        s.max_nesting_depth as f64,
        s.avg_branching_factor,
        s.avg_params_per_function,
        s.param_count_stddev,
        s.max_ast_depth as f64,
        s.avg_leaf_depth,
    ]);
    values.extend(NodeType::ALL.map(|t| s.avg_depth(t)));
    for p in NodeType::ALL {
        for c in NodeType::ALL {
            values.push(s.bigram(p, c));
        }
    }
    for kw in &vocab.keywords {
        values.push(s.keyword_frequencies.get(kw).copied().unwrap_or(0.0));
    }
    debug_assert_eq!(values.len(), names.len());
    FeatureVector {
        path: file.path.clone(),
        label: file.label,
        names: Arc::clone(names),
        values,
    }
}

/// Assembles every file against one schema.
pub fn assemble_all<'a>(files: impl IntoIterator<Item = &'a ExtractedFile>, vocab: &Vocabulary) -> Dataset {
    let names: Arc<[String]> = vocab.feature_names().into();
    let vectors = files.into_iter().map(|f| assemble(f, vocab, &names)).collect();
    Dataset { names, vectors }
}

/// Hex SHA-256 over the newline-joined feature names.
pub fn schema_fingerprint(names: &[String]) -> String {
    let mut hasher = Sha256::new();
    for name in names {
        hasher.update(name.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Lexical,
    Layout,
    All,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 3] = [FeatureGroup::Lexical, FeatureGroup::Layout, FeatureGroup::All];

    pub fn id(self) -> &'static str {
        match self {
            FeatureGroup::Lexical => "lexical",
            FeatureGroup::Layout => "layout",
            FeatureGroup::All => "all",
        }
    }

    /// Syntax features travel with the layout group.
    pub fn contains(self, name: &str) -> bool {
        match self {
            FeatureGroup::Lexical => name.starts_with("lex."),
            FeatureGroup::Layout => name.starts_with("layout.") || name.starts_with("syntax."),
            FeatureGroup::All => true,
        }
    }

    pub fn mask(self, names: &[String]) -> Vec<bool> {
        names.iter().map(|n| self.contains(n)).collect()
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FeatureGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.id() == s)
            .ok_or_else(|| format!("unknown feature group `{s}` (expected lexical, layout or all)"))
    }
}

/// Vectors sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Arc<[String]>,
    pub vectors: Vec<FeatureVector>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn fingerprint(&self) -> String {
        schema_fingerprint(&self.names)
    }

    /// Keeps only the columns of `group`.
    pub fn select(&self, group: FeatureGroup) -> Dataset {
        let keep: Vec<usize> = (0..self.names.len())
            .filter(|&i| group.contains(&self.names[i]))
            .collect();
        let names: Arc<[String]> = keep.iter().map(|&i| self.names[i].clone()).collect();
        let vectors = self
            .vectors
            .iter()
            .map(|v| FeatureVector {
                path: v.path.clone(),
                label: v.label,
                names: Arc::clone(&names),
                values: keep.iter().map(|&i| v.values[i]).collect(),
            })
            .collect();
        Dataset { names, vectors }
    }

    pub fn labels(&self) -> Vec<Label> {
        self.vectors.iter().map(|v| v.label).collect()
    }
}
