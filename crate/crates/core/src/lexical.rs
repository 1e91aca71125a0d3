//! Per-category vocabularies and term frequencies.
//!
//! Tokens are projected onto four categories: comment/string text,
//! identifiers, keywords and imported library names. Each category keeps its
//! own word counts, and TF is computed against the category total.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tokenizer::{split_identifier, TokenKind, TokenStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    CommentsAndStrings,
    Identifiers,
    Keywords,
    ImportedLibraries,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::CommentsAndStrings,
        Category::Identifiers,
        Category::Keywords,
        Category::ImportedLibraries,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Category::CommentsAndStrings => "comments_strings",
            Category::Identifiers => "identifiers",
            Category::Keywords => "keywords",
            Category::ImportedLibraries => "imports",
        }
    }

    pub fn from_id(id: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.id() == id)
    }

    /// The category a token contributes to, if any.
    pub fn of(kind: TokenKind) -> Option<Category> {
        match kind {
            TokenKind::Comment | TokenKind::StringLiteral => Some(Category::CommentsAndStrings),
            TokenKind::Identifier => Some(Category::Identifiers),
            TokenKind::Keyword => Some(Category::Keywords),
            TokenKind::ImportName => Some(Category::ImportedLibraries),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Word counts of one category within one file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
}

impl CategoryCounts {
    fn add(&mut self, word: String) {
        *self.counts.entry(word).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn tf(&self, word: &str) -> f64 {
        match self.counts.get(word) {
            Some(&c) => c as f64 / self.total as f64,
            None => 0.0,
        }
    }

    pub fn tf_map(&self) -> BTreeMap<String, f64> {
        self.counts
            .iter()
            .map(|(w, &c)| (w.clone(), c as f64 / self.total as f64))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LexicalProfile {
    pub comments_strings: CategoryCounts,
    pub identifiers: CategoryCounts,
    pub keywords: CategoryCounts,
    pub imports: CategoryCounts,
}

impl LexicalProfile {
    pub fn category(&self, category: Category) -> &CategoryCounts {
        match category {
            Category::CommentsAndStrings => &self.comments_strings,
            Category::Identifiers => &self.identifiers,
            Category::Keywords => &self.keywords,
            Category::ImportedLibraries => &self.imports,
        }
    }

    fn category_mut(&mut self, category: Category) -> &mut CategoryCounts {
        match category {
            Category::CommentsAndStrings => &mut self.comments_strings,
            Category::Identifiers => &mut self.identifiers,
            Category::Keywords => &mut self.keywords,
            Category::ImportedLibraries => &mut self.imports,
        }
    }
}

pub fn lexical_profile(stream: &TokenStream) -> LexicalProfile {
    let mut profile = LexicalProfile::default();
    for tok in &stream.tokens {
        let Some(category) = Category::of(tok.kind) else {
            continue;
        };
        let bucket = profile.category_mut(category);
        match tok.kind {
            TokenKind::Comment => {
                for word in text_words(comment_body(&tok.text)) {
                    bucket.add(word);
                }
            }
            TokenKind::StringLiteral => {
                for word in text_words(&string_body(&tok.text)) {
                    bucket.add(word);
                }
            }
            TokenKind::Identifier => {
                for word in split_identifier(&tok.text) {
                    bucket.add(word);
                }
            }
            TokenKind::Keyword => bucket.add(tok.text.clone()),
            TokenKind::ImportName => bucket.add(tok.text.trim().to_lowercase()),
            _ => unreachable!("filtered by Category::of"),
        }
    }
    profile
}

/// Splits free text on anything that is not alphanumeric or `_`, then
/// applies identifier splitting to each word.
fn text_words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .flat_map(split_identifier)
}

fn comment_body(text: &str) -> &str {
    if let Some(rest) = text.strip_prefix("//") {
        rest
    } else if let Some(rest) = text.strip_prefix("/*") {
        rest.strip_suffix("*/").unwrap_or(rest)
    } else {
        text
    }
}

/// Literal contents with prefix, delimiters and escape sequences removed.
fn string_body(text: &str) -> String {
    let Some(quote) = text.find('"') else {
        return text.to_string();
    };
    let prefix = &text[..quote];
    let rest = &text[quote..];
    if prefix.ends_with('R') {
        // R"delim( ... )delim"
        let inner = &rest[1..];
        let Some(open) = inner.find('(') else {
            return inner.to_string();
        };
        let delim = &inner[..open];
        let body = &inner[open + 1..];
        let terminator = format!("){delim}\"");
        return body.strip_suffix(&terminator).unwrap_or(body).to_string();
    }
    let body = if let Some(tb) = rest.strip_prefix("\"\"\"") {
        tb.strip_suffix("\"\"\"").unwrap_or(tb)
    } else {
        let b = &rest[1..];
        b.strip_suffix('"').unwrap_or(b)
    };
    // `\n`, `\t`, `\"` would otherwise glue a letter onto the next word
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            chars.next();
            out.push(' ');
        } else {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Language, LanguageProfile};
    use crate::tokenizer::tokenize;
    use proptest::prelude::*;

    fn profile_of(src: &str, lang: Language) -> LexicalProfile {
        lexical_profile(&tokenize("t", src, &LanguageProfile::builtin(lang)))
    }

    #[test]
    fn identifier_tf() {
        let p = profile_of("maxValue + i + maxValue", Language::Cpp);
        let tf = p.identifiers.tf_map();
        assert_eq!(tf.len(), 3);
        assert!((tf["max"] - 0.4).abs() < 1e-12);
        assert!((tf["value"] - 0.4).abs() < 1e-12);
        assert!((tf["i"] - 0.2).abs() < 1e-12);
        assert_eq!(p.identifiers.total, 5);
    }

    #[test]
    fn no_comments_means_empty_category() {
        let p = profile_of("int a = 1;", Language::Cpp);
        assert_eq!(p.comments_strings.total, 0);
        assert!(p.comments_strings.tf_map().is_empty());
    }

    #[test]
    fn java_imports_counted_whole_and_lowercased() {
        let p = profile_of(
            "import java.util.List;\nimport java.util.List;\nclass A {}",
            Language::Java,
        );
        let tf = p.imports.tf_map();
        assert_eq!(tf.len(), 1);
        assert_eq!(tf["java.util.list"], 1.0);
        assert_eq!(p.keywords.counts["import"], 2);
    }

    #[test]
    fn comment_and_string_words() {
        let p = profile_of(
            "// Compute maxValue\nputs(\"hello\\nworld, HTTPServer\"); /* done */",
            Language::Cpp,
        );
        let words: Vec<_> = p.comments_strings.counts.keys().cloned().collect();
        assert_eq!(
            words,
            ["compute", "done", "hello", "http", "max", "server", "value", "world"]
        );
    }

    #[test]
    fn raw_string_body() {
        assert_eq!(string_body("R\"x(a b)x\""), "a b");
        assert_eq!(string_body("u8\"ab\""), "ab");
        assert_eq!(string_body("\"\"\"\nhi\n\"\"\""), "\nhi\n");
    }

    proptest! {
        #[test]
        fn tf_normalised_and_scale_invariant(src in "[a-zA-Z_ ;(){}\"/*\n0-9]{0,160}") {
            let p = profile_of(&src, Language::Cpp);
            let doubled = profile_of(&format!("{src}\n{src}"), Language::Cpp);
            for cat in Category::ALL {
                let counts = p.category(cat);
                let tf = counts.tf_map();
                if counts.total > 0 {
                    let sum: f64 = tf.values().sum();
                    prop_assert!((sum - 1.0).abs() < 1e-9);
                } else {
                    prop_assert!(tf.is_empty());
                }
                // a line comment or unterminated literal can swallow the
                // separator, so only compare when the copies stay apart
                if !src.contains("//") && !src.contains("/*") && !src.contains('"') {
                    let tf2 = doubled.category(cat).tf_map();
                    prop_assert_eq!(tf.len(), tf2.len());
                    for (w, v) in &tf {
                        prop_assert!((v - tf2[w]).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
