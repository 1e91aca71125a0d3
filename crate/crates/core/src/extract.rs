//! Per-file extraction and corpus discovery.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::features::{ExtractedFile, Label};
use crate::layout::layout_metrics_with_tree;
use crate::lexical::lexical_profile;
use crate::profile::{Language, LanguageProfile};
use crate::syntax::{parse_syntax, syntax_metrics};
use crate::tokenizer::tokenize;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot walk {path}: {message}")]
    Walk { path: String, message: String },
}

pub fn extract_source(path: &str, source: &str, profile: &LanguageProfile, label: Label) -> ExtractedFile {
    let stream = tokenize(path, source, profile);
    let tree = parse_syntax(&stream);
    ExtractedFile {
        path: path.to_string(),
        language: profile.language(),
        label,
        lexical: lexical_profile(&stream),
        layout: layout_metrics_with_tree(source, &stream, &tree),
        syntax: syntax_metrics(&tree, &stream),
        diagnostics: stream.diagnostics.len() + tree.diagnostics.len(),
    }
}

/// Invalid UTF-8 is replaced, not rejected.
pub fn extract_bytes(path: &str, bytes: &[u8], profile: &LanguageProfile, label: Label) -> ExtractedFile {
    extract_source(path, &String::from_utf8_lossy(bytes), profile, label)
}

/// A source file found under a corpus root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub path: PathBuf,
    /// Path relative to the corpus root, `/`-separated.
    pub relative: String,
    pub label: Label,
}

/// Label implied by the first directory component: `human/...` or
/// `llm/...`; anything else is unlabeled.
pub fn label_from_relative(relative: &str) -> Label {
    match relative.split('/').next() {
        Some("human") => Label::Human,
        Some("llm") => Label::Llm,
        _ => Label::Unlabeled,
    }
}

/// Files of `language` under `root`, sorted by relative path. A plain file
/// passed as `root` is returned on its own.
pub fn discover(root: &Path, language: Language) -> Result<Vec<CorpusEntry>, ExtractError> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| ExtractError::Walk {
            path: root.display().to_string(),
            message: e.to_string(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let name = path.to_string_lossy();
        if Language::from_path(&name) != Some(language) {
            continue;
        }
        let relative = match path.strip_prefix(root) {
            Ok(r) if !r.as_os_str().is_empty() => r
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/"),
            _ => path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        out.push(CorpusEntry {
            path: path.to_path_buf(),
            label: label_from_relative(&relative),
            relative,
        });
    }
    out.sort_by(|a, b| a.relative.cmp(&b.relative));
    Ok(out)
}

/// Extracts every entry in parallel; output order follows `entries`.
/// `label_override` replaces directory-derived labels.
pub fn extract_corpus(
    entries: &[CorpusEntry],
    profile: &LanguageProfile,
    label_override: Option<Label>,
) -> Result<Vec<ExtractedFile>, ExtractError> {
    entries
        .par_iter()
        .map(|e| {
            let bytes = std::fs::read(&e.path).map_err(|source| ExtractError::Read {
                path: e.path.display().to_string(),
                source,
            })?;
            Ok(extract_bytes(&e.relative, &bytes, profile, label_override.unwrap_or(e.label)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discovers_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        for (p, body) in [
            ("human/b.cpp", "int b;\n"),
            ("human/a.cc", "int a;\n"),
            ("llm/x/c.cpp", "int c;\n"),
            ("misc/d.cpp", "int d;\n"),
            ("llm/E.java", "class E {}\n"),
            ("notes.txt", "x"),
        ] {
            let full = root.join(p);
            std::fs::create_dir_all(full.parent().unwrap()).unwrap();
            std::fs::write(full, body).unwrap();
        }
        let found = discover(root, Language::Cpp).unwrap();
        let rel: Vec<_> = found.iter().map(|e| (e.relative.as_str(), e.label)).collect();
        assert_eq!(
            rel,
            [
                ("human/a.cc", Label::Human),
                ("human/b.cpp", Label::Human),
                ("llm/x/c.cpp", Label::Llm),
                ("misc/d.cpp", Label::Unlabeled),
            ]
        );
        let files = extract_corpus(&found, &LanguageProfile::builtin(Language::Cpp), None).unwrap();
        assert_eq!(files.len(), 4);
        assert_eq!(files[2].path, "llm/x/c.cpp");
        let forced = extract_corpus(&found, &LanguageProfile::builtin(Language::Cpp), Some(Label::Llm)).unwrap();
        assert!(forced.iter().all(|f| f.label == Label::Llm));
        assert_eq!(discover(root, Language::Java).unwrap().len(), 1);
    }

    #[test]
    fn single_file_root() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("one.cpp");
        std::fs::write(&f, "int x;\n").unwrap();
        let found = discover(&f, Language::Cpp).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].relative, "one.cpp");
    }

    #[test]
    fn invalid_utf8_is_tolerated() {
        let f = extract_bytes("x.cpp", b"int \xff\xfe x;\n", &LanguageProfile::builtin(Language::Cpp), Label::Human);
        assert_eq!(f.layout.line_length_histogram[0], 1.0);
    }
}
