//! Stylometric detection of LLM-generated C++ and Java source code.
//!
//! The pipeline runs per file: [`tokenizer`] → [`lexical`] / [`layout`] /
//! [`syntax`] → [`features`] (fixed-length vectors against a corpus
//! vocabulary) → [`classifiers`] → [`evaluation`]. [`cleanser`] prepares
//! repository corpora and [`harness`] compiles and judges programs.

pub mod classifiers;
pub mod cleanser;
pub mod evaluation;
pub mod extract;
pub mod features;
pub mod harness;
pub mod layout;
pub mod lexical;
pub mod profile;
pub mod synthetic;
pub mod syntax;
pub mod tokenizer;

pub use profile::{Language, LanguageProfile};
pub use tokenizer::{split_identifier, tokenize, tokenize_bytes, Token, TokenKind, TokenStream};
pub use lexical::{lexical_profile, Category, LexicalProfile};
pub use syntax::{parse_syntax, syntax_metrics, NodeType, SyntaxMetrics, SyntaxNode, SyntaxTree};
pub use layout::{layout_metrics, LayoutMetrics};
pub use features::{Dataset, ExtractedFile, FeatureGroup, FeatureVector, Label, Vocabulary};
pub use classifiers::{train, ModelKind, ModelSpec, Prediction, TrainedModel};
