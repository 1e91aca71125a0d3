//! Per-language lexical configuration.
//!
//! A profile carries the reserved-word set and the comment, string and
//! import conventions the tokenizer needs. Defaults for C++ and Java are
//! compiled in; a directory of `<lang>.keywords` files can replace them.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const CPP_KEYWORDS: &str = include_str!("../profiles/cpp.keywords");
const JAVA_KEYWORDS: &str = include_str!("../profiles/java.keywords");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Cpp,
    Java,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::Cpp, Language::Java];

    pub fn id(self) -> &'static str {
        match self {
            Language::Cpp => "cpp",
            Language::Java => "java",
        }
    }

    /// File extensions recognised as belonging to this language.
    pub fn extensions(self) -> &'static [&'static str] {
        match self {
            Language::Cpp => &["cpp", "cc", "cxx", "c++", "hpp", "hh", "hxx", "h"],
            Language::Java => &["java"],
        }
    }

    /// Guess a language from a file path's extension.
    pub fn from_path(path: &str) -> Option<Language> {
        let ext = path.rsplit_once('.')?.1.to_ascii_lowercase();
        Language::ALL
            .into_iter()
            .find(|lang| lang.extensions().contains(&ext.as_str()))
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Language {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cpp" | "c++" | "cxx" => Ok(Language::Cpp),
            "java" => Ok(Language::Java),
            other => Err(ProfileError::UnknownLanguage(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("unknown language `{0}` (expected cpp or java)")]
    UnknownLanguage(String),
    #[error("keyword list for {language} is empty")]
    EmptyKeywords { language: Language },
    #[error("invalid keyword `{word}` in {language} list: keywords must be lowercase ASCII words")]
    InvalidKeyword { language: Language, word: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Lexical conventions of one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageProfile {
    language: Language,
    keywords: BTreeSet<String>,
    line_comment: &'static str,
    block_comment: (&'static str, &'static str),
    import_marker: &'static str,
    string_delimiters: &'static [char],
}

impl LanguageProfile {
    /// Builds a profile from a keyword list in the shipped file format:
    /// one word per line, blank lines and `#` comments ignored.
    pub fn from_keyword_list(language: Language, text: &str) -> Result<Self, ProfileError> {
        let mut keywords = BTreeSet::new();
        for line in text.lines() {
            let word = line.split('#').next().unwrap_or("").trim();
            if word.is_empty() {
                continue;
            }
            if !is_keyword_shape(word) {
                return Err(ProfileError::InvalidKeyword {
                    language,
                    word: word.to_string(),
                });
            }
            keywords.insert(word.to_string());
        }
        if keywords.is_empty() {
            return Err(ProfileError::EmptyKeywords { language });
        }
        let import_marker = match language {
            Language::Cpp => "#include",
            Language::Java => "import",
        };
        Ok(LanguageProfile {
            language,
            keywords,
            line_comment: "//",
            block_comment: ("/*", "*/"),
            import_marker,
            string_delimiters: &['"'],
        })
    }

    /// The compiled-in profile for `language`.
    pub fn builtin(language: Language) -> Self {
        let text = match language {
            Language::Cpp => CPP_KEYWORDS,
            Language::Java => JAVA_KEYWORDS,
        };
        Self::from_keyword_list(language, text).expect("shipped keyword lists are valid")
    }

    /// Loads `<dir>/<lang>.keywords`, falling back to the builtin list when
    /// the file does not exist.
    pub fn load(dir: &Path, language: Language) -> Result<Self, ProfileError> {
        let path = dir.join(format!("{}.keywords", language.id()));
        match std::fs::read_to_string(&path) {
            Ok(text) => Self::from_keyword_list(language, &text),
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => Ok(Self::builtin(language)),
            Err(source) => Err(ProfileError::Io {
                path: path.display().to_string(),
                source,
            }),
        }
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn keywords(&self) -> &BTreeSet<String> {
        &self.keywords
    }

    pub fn is_keyword(&self, word: &str) -> bool {
        self.keywords.contains(word)
    }

    pub fn line_comment(&self) -> &str {
        self.line_comment
    }

    pub fn block_comment(&self) -> (&str, &str) {
        self.block_comment
    }

    pub fn import_marker(&self) -> &str {
        self.import_marker
    }

    pub fn string_delimiters(&self) -> &[char] {
        self.string_delimiters
    }
}

fn is_keyword_shape(word: &str) -> bool {
    let mut chars = word.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}
