use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::cv::{cross_validate_grid, CvConfig};
use super::metrics::Metrics;
use super::EvalError;
use crate::classifiers::{ModelKind, ModelSpec};
use crate::features::{ExtractedFile, FeatureGroup, Label};
use crate::profile::LanguageProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub language: String,
    pub files: usize,
    pub human: usize,
    pub llm: usize,
}

impl DatasetSummary {
    pub fn of(files: &[ExtractedFile], language: &str) -> Self {
        DatasetSummary {
            language: language.to_string(),
            files: files.len(),
            human: files.iter().filter(|f| f.label == Label::Human).count(),
            llm: files.iter().filter(|f| f.label == Label::Llm).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    pub algorithm: ModelKind,
    pub group: FeatureGroup,
    pub metrics: Metrics,
}

/// Algorithm × feature-group grid of held-out metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub folds: usize,
    pub seed: u64,
    pub dataset: DatasetSummary,
    pub algorithms: Vec<ModelKind>,
    pub groups: Vec<FeatureGroup>,
    pub cells: Vec<EvalCell>,
}

pub const METRIC_NAMES: [&str; 4] = ["Accuracy", "Precision", "Recall", "F-Measure"];

fn quad(m: &Metrics) -> [f64; 4] {
    [m.accuracy, m.precision, m.recall, m.f_measure]
}

impl EvalReport {
    pub fn cell(&self, algorithm: ModelKind, group: FeatureGroup) -> Option<&EvalCell> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.group == group)
    }

    /// Rows are algorithms; each feature group spans four metric columns.
    pub fn to_table(&self) -> String {
        let name_w = self
            .algorithms
            .iter()
            .map(|a| a.display_name().len())
            .max()
            .unwrap_or(0)
            .max("Algorithm".len());
        let col_w = METRIC_NAMES.iter().map(|m| m.len()).max().unwrap();
        let group_w = 4 * col_w + 3;
        let mut out = String::new();
        let _ = write!(out, "{:name_w$}", "");
        for g in &self.groups {
            let _ = write!(out, " | {:^group_w$}", g.id());
        }
        out.push('\n');
        let _ = write!(out, "{:name_w$}", "Algorithm");
        for _ in &self.groups {
            out.push_str(" |");
            for m in METRIC_NAMES {
                let _ = write!(out, " {m:>col_w$}");
            }
        }
        out.push('\n');
        out.push_str(&"-".repeat(name_w + self.groups.len() * (group_w + 3)));
        out.push('\n');
        for &a in &self.algorithms {
            let _ = write!(out, "{:name_w$}", a.display_name());
            for &g in &self.groups {
                out.push_str(" |");
                match self.cell(a, g) {
                    Some(c) => {
                        for v in quad(&c.metrics) {
                            let _ = write!(out, " {v:>col_w$.3}");
                        }
                    }
                    None => {
                        for _ in 0..4 {
                            let _ = write!(out, " {:>col_w$}", "-");
                        }
                    }
                }
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\n{} files ({} human, {} llm), {}-fold stratified CV, seed {}",
            self.dataset.files, self.dataset.human, self.dataset.llm, self.folds, self.seed
        );
        out
    }

    /// One row per (algorithm, group) with full-precision values.
    pub fn write_csv(&self, out: impl Write) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["algorithm", "group", "accuracy", "precision", "recall", "f_measure"])?;
        for c in &self.cells {
            let mut row = vec![c.algorithm.id().to_string(), c.group.id().to_string()];
            row.extend(quad(&c.metrics).iter().map(|v| format!("{v}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn ablate(
    specs: &[ModelSpec],
    groups: &[FeatureGroup],
    files: &[ExtractedFile],
    profile: &LanguageProfile,
    cfg: &CvConfig,
) -> Result<EvalReport, EvalError> {
    let grid = cross_validate_grid(specs, groups, files, profile, cfg)?;
    let mut cells = Vec::new();
    for (spec, row) in specs.iter().zip(grid) {
        for (&group, result) in groups.iter().zip(row) {
            cells.push(EvalCell {
                algorithm: spec.kind(),
                group,
                metrics: result.metrics,
            });
        }
    }
    Ok(EvalReport {
        folds: cfg.folds,
        seed: cfg.seed,
        dataset: DatasetSummary::of(files, profile.language().id()),
        algorithms: specs.iter().map(ModelSpec::kind).collect(),
        groups: groups.to_vec(),
        cells,
    })
}
