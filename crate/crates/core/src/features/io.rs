//! Dataset and vocabulary files.
//!
//! CSV: header of feature names followed by `label`,`path`; values in the
//! shortest decimal form that round-trips. JSONL: a schema line
//! `{"schema": [...]}` then one `{"path", "label", "features": {name: value}}`
//! object per file. Vocabulary: tab-separated `category word doc_freq`
//! lines under a versioned header.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use super::{Dataset, FeatureError, FeatureVector, Label, VocabEntry, Vocabulary, VOCABULARY_VERSION};
use crate::lexical::Category;
use crate::profile::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Jsonl,
}

impl DatasetFormat {
    /// `.jsonl` / `.ndjson` select JSONL, anything else CSV.
    pub fn from_path(path: &Path) -> DatasetFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => DatasetFormat::Jsonl,
            _ => DatasetFormat::Csv,
        }
    }
}

fn format_error(path: &str, line: usize, message: impl Into<String>) -> FeatureError {
    FeatureError::Format {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

pub fn write_csv(dataset: &Dataset, out: impl Write) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = dataset.names.iter().map(String::as_str).collect();
    header.extend(["label", "path"]);
    w.write_record(&header)?;
    for v in &dataset.vectors {
        let mut row: Vec<String> = v.values.iter().map(|x| format!("{x}")).collect();
        row.push(v.label.id().to_string());
        row.push(v.path.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(input: impl std::io::Read, source: &str) -> Result<Dataset, FeatureError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let n = header.len();
    if n < 2 || &header[n - 2] != "label" || &header[n - 1] != "path" {
        return Err(format_error(source, 1, "header must end with `label,path`"));
    }
    let names: Arc<[String]> = header.iter().take(n - 2).map(str::to_string).collect();
    let mut vectors = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != n {
            return Err(format_error(source, line, format!("expected {n} fields, found {}", rec.len())));
        }
        let mut values = Vec::with_capacity(n - 2);
        for (k, field) in rec.iter().take(n - 2).enumerate() {
            let x: f64 = field
                .parse()
                .map_err(|_| format_error(source, line, format!("column `{}`: not a number: {field:?}", names[k])))?;
            if !x.is_finite() {
                return Err(format_error(source, line, format!("column `{}`: non-finite value", names[k])));
            }
            values.push(x);
        }
        vectors.push(FeatureVector {
            path: rec[n - 1].to_string(),
            label: rec[n - 2].parse()?,
            names: Arc::clone(&names),
            values,
        });
    }
    Ok(Dataset { names, vectors })
}

pub fn write_jsonl(dataset: &Dataset, mut out: impl Write) -> Result<(), FeatureError> {
    serde_json::to_writer(&mut out, &json!({ "schema": &*dataset.names }))?;
    out.write_all(b"\n")?;
    for v in &dataset.vectors {
        let features: Map<String, Value> = v
            .names
            .iter()
            .zip(&v.values)
            .map(|(n, x)| (n.clone(), json!(x)))
            .collect();
        serde_json::to_writer(
            &mut out,
            &json!({ "path": v.path, "label": v.label.id(), "features": features }),
        )?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl(input: impl BufRead, source: &str) -> Result<Dataset, FeatureError> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
        Ok(l) => !l.trim().is_empty(),
        Err(_) => true,
    });
    let Some((_, first)) = lines.next() else {
        return Err(format_error(source, 1, "missing schema line"));
    };
    let head: Value = serde_json::from_str(&first?)?;
    let names: Arc<[String]> = head
        .get("schema")
        .and_then(Value::as_array)
        .ok_or_else(|| format_error(source, 1, "first line must be {\"schema\": [...]}"))?
        .iter()
        .map(|v| v.as_str().map(str::to_string))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| format_error(source, 1, "schema entries must be strings"))?
        .into();
    let mut vectors = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let rec: Value = serde_json::from_str(&line?)?;
        let path = rec.get("path").and_then(Value::as_str).unwrap_or_default().to_string();
        let label: Label = rec.get("label").and_then(Value::as_str).unwrap_or("").parse()?;
        let features = rec
            .get("features")
            .and_then(Value::as_object)
            .ok_or_else(|| format_error(source, line_no, "missing `features` object"))?;
        if features.len() != names.len() {
            return Err(format_error(
                source,
                line_no,
                format!("expected {} features, found {}", names.len(), features.len()),
            ));
        }
        let values = names
            .iter()
            .map(|n| {
                features
                    .get(n)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| format_error(source, line_no, format!("missing or non-numeric `{n}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        vectors.push(FeatureVector {
            path,
            label,
            names: Arc::clone(&names),
            values,
        });
    }
    Ok(Dataset { names, vectors })
}

/// Reads a dataset, picking the format from the file extension.
pub fn read_dataset(path: &Path) -> Result<Dataset, FeatureError> {
    let file = std::fs::File::open(path)?;
    let source = path.display().to_string();
    match DatasetFormat::from_path(path) {
        DatasetFormat::Csv => read_csv(file, &source),
        DatasetFormat::Jsonl => read_jsonl(std::io::BufReader::new(file), &source),
    }
}

const VOCAB_MAGIC: &str = "#codeorigin-vocabulary";

pub fn write_vocabulary(vocab: &Vocabulary, mut out: impl Write) -> Result<(), FeatureError> {
    writeln!(out, "{VOCAB_MAGIC}\tv{}", vocab.version)?;
    writeln!(out, "#language\t{}", vocab.language)?;
    writeln!(out, "#min_doc_freq\t{}", vocab.min_doc_freq)?;
    for kw in &vocab.keywords {
        writeln!(out, "#keyword_slot\t{kw}")?;
    }
    for (k, cat) in Category::ALL.into_iter().enumerate() {
        for e in &vocab.categories[k] {
            writeln!(out, "{}\t{}\t{}", cat.id(), e.word, e.doc_freq)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_vocabulary(input: impl BufRead, source: &str) -> Result<Vocabulary, FeatureError> {
    let mut version = None;
    let mut language = None;
    let mut min_doc_freq = None;
    let mut keywords = Vec::new();
    let mut categories: [Vec<VocabEntry>; 4] = Default::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |msg: &str| format_error(source, line_no, msg);
        match fields[0] {
            VOCAB_MAGIC => {
                let v = fields
                    .get(1)
                    .and_then(|v| v.strip_prefix('v'))
                    .and_then(|v| v.parse::<u32>().ok())
                    .ok_or_else(|| bad("malformed version header"))?;
                if v != VOCABULARY_VERSION {
                    return Err(bad(&format!("unsupported vocabulary version {v}")));
                }
                version = Some(v);
            }
            "#language" => {
                let lang: Language = fields
                    .get(1)
                    .ok_or_else(|| bad("missing language"))?
                    .parse()
                    .map_err(|_| bad("unknown language"))?;
                language = Some(lang);
            }
            "#min_doc_freq" => {
                min_doc_freq = Some(
                    fields
                        .get(1)
                        .and_then(|v| v.parse::<usize>().ok())
                        .ok_or_else(|| bad("malformed min_doc_freq"))?,
                );
            }
            "#keyword_slot" => keywords.push(fields.get(1).ok_or_else(|| bad("missing keyword"))?.to_string()),
            other if other.starts_with('#') => {}
            cat_id => {
                let cat = Category::from_id(cat_id).ok_or_else(|| bad("unknown category"))?;
                if fields.len() != 3 {
                    return Err(bad("expected `category<TAB>word<TAB>doc_freq`"));
                }
                let doc_freq = fields[2].parse().map_err(|_| bad("malformed doc_freq"))?;
                let k = Category::ALL.iter().position(|&c| c == cat).unwrap();
                categories[k].push(VocabEntry {
                    word: fields[1].to_string(),
                    doc_freq,
                });
            }
        }
    }
    let version = version.ok_or_else(|| format_error(source, 1, "missing version header"))?;
    Ok(Vocabulary {
        version,
        language: language.ok_or_else(|| format_error(source, 1, "missing #language"))?,
        min_doc_freq: min_doc_freq.ok_or_else(|| format_error(source, 1, "missing #min_doc_freq"))?,
        categories,
        keywords,
    })
}
