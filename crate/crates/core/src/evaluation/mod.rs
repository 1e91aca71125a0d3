//! Metrics, stratified cross-validation, the ablation grid and token
//! frequency-difference reports.

mod cv;
mod freqdiff;
mod metrics;
mod report;

use thiserror::Error;

use crate::classifiers::ClassifierError;
use crate::features::{FeatureError, Label};

pub use cv::{cross_validate, cross_validate_grid, fold_datasets, stratified_folds, CvConfig, CvResult, HeldOut};
pub use freqdiff::{corpus_frequencies, freq_diff, relative_difference, FreqDiffReport, FreqDiffRow, RELATIVE_DIFF_THRESHOLD};
pub use metrics::{confusion, evaluate, metrics_from_confusion, ClassMetrics, Confusion, Metrics};
pub use report::{ablate, DatasetSummary, EvalCell, EvalReport, METRIC_NAMES};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no predictions to evaluate")]
    EmptyPredictions,
    #[error("{gold} gold labels but {predicted} predictions")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("predictions and gold labels must be human or llm")]
    UnlabeledPrediction,
    #[error("cross-validation needs at least 2 folds, got {0}")]
    InvalidFolds(usize),
    #[error("{count} {label} examples cannot fill {folds} folds")]
    TooFewExamples { label: Label, count: usize, folds: usize },
    #[error("row {0} is unlabeled; cross-validation needs human or llm labels")]
    UnlabeledRow(usize),
    #[error("both corpora must be non-empty")]
    EmptyCorpus,
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}
