use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, Metrics};
use super::EvalError;
use crate::classifiers::{train, ModelSpec};
use crate::features::{assemble_all, build_vocabulary, Dataset, ExtractedFile, FeatureGroup, Label};
use crate::profile::LanguageProfile;

/// Fold index for every row. Each class is shuffled with `seed` and dealt
/// round-robin; the dealing position carries over from one class to the
/// next so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    if folds < 2 {
        return Err(EvalError::InvalidFolds(folds));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![usize::MAX; labels.len()];
    let mut next = 0usize;
    for class in [Label::Human, Label::Llm] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if rows.len() < folds {
            return Err(EvalError::TooFewExamples {
                label: class,
                count: rows.len(),
                folds,
            });
        }
        rows.shuffle(&mut rng);
        for r in rows {
            assignment[r] = next % folds;
            next += 1;
        }
    }
    if let Some(i) = assignment.iter().position(|&f| f == usize::MAX) {
        return Err(EvalError::UnlabeledRow(i));
    }
    Ok(assignment)
}

/// Train and test datasets of one fold, built against a vocabulary fitted
/// on the training files only.
pub fn fold_datasets(
    files: &[ExtractedFile],
    assignment: &[usize],
    fold: usize,
    min_doc_freq: usize,
    profile: &LanguageProfile,
) -> Result<(Dataset, Dataset), EvalError> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (f, &a) in files.iter().zip(assignment) {
        if a == fold {
            test.push(f);
        } else {
            train.push(f);
        }
    }
    let vocab = build_vocabulary(train.iter().map(|f| &f.lexical), min_doc_freq, profile)?;
    Ok((assemble_all(train, &vocab), assemble_all(test, &vocab)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOut {
    pub path: String,
    pub fold: usize,
    pub gold: Label,
    pub predicted: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub metrics: Metrics,
    pub folds: usize,
    pub seed: u64,
    pub predictions: Vec<HeldOut>,
}

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub min_doc_freq: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            seed: 0,
            min_doc_freq: crate::features::DEFAULT_MIN_DOC_FREQ,
        }
    }
}

/// Runs every (spec, group) pair on the same folds. Vocabulary and
/// standardization are refitted inside each training fold. Results are
/// indexed `[spec][group]`.
pub fn cross_validate_grid(
    specs: &[ModelSpec],
    groups: &[FeatureGroup],
    files: &[ExtractedFile],
    profile: &LanguageProfile,
    cfg: &CvConfig,
) -> Result<Vec<Vec<CvResult>>, EvalError> {
    let labels: Vec<Label> = files.iter().map(|f| f.label).collect();
    let assignment = stratified_folds(&labels, cfg.folds, cfg.seed)?;
    // [fold][spec][group] -> predictions for that fold's test rows
    let per_fold: Vec<Vec<Vec<Vec<HeldOut>>>> = (0..cfg.folds)
        .into_par_iter()
        .map(|fold| -> Result<_, EvalError> {
            let (train_ds, test_ds) = fold_datasets(files, &assignment, fold, cfg.min_doc_freq, profile)?;
            let mut by_spec = Vec::with_capacity(specs.len());
            for spec in specs {
                let mut by_group = Vec::with_capacity(groups.len());
                for &group in groups {
                    let tr = train_ds.select(group);
                    let te = test_ds.select(group);
                    let model = train(spec, &tr)?;
                    let preds = model.predict_dataset(&te)?;
                    by_group.push(
                        te.vectors
                            .iter()
                            .zip(preds)
                            .map(|(v, p)| HeldOut {
                                path: v.path.clone(),
                                fold,
                                gold: v.label,
                                predicted: p.label,
                                score: p.score,
                            })
                            .collect(),
                    );
                }
                by_spec.push(by_group);
            }
            Ok(by_spec)
        })
        .collect::<Result<_, _>>()?;

    let mut grid = Vec::with_capacity(specs.len());
    for s in 0..specs.len() {
        let mut row = Vec::with_capacity(groups.len());
        for g in 0..groups.len() {
            let mut predictions: Vec<HeldOut> = per_fold.iter().flat_map(|f| f[s][g].iter().cloned()).collect();
            predictions.sort_by(|a, b| a.path.cmp(&b.path));
            let gold: Vec<Label> = predictions.iter().map(|p| p.gold).collect();
            let pred: Vec<Label> = predictions.iter().map(|p| p.predicted).collect();
            row.push(CvResult {
                metrics: evaluate(&gold, &pred)?,
                folds: cfg.folds,
                seed: cfg.seed,
                predictions,
            });
        }
        grid.push(row);
    }
    Ok(grid)
}

pub fn cross_validate(
    spec: &ModelSpec,
    group: FeatureGroup,
    files: &[ExtractedFile],
    profile: &LanguageProfile,
    cfg: &CvConfig,
) -> Result<CvResult, EvalError> {
    let mut grid = cross_validate_grid(std::slice::from_ref(spec), &[group], files, profile, cfg)?;
    Ok(grid.remove(0).remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Human as H, Llm as L};

    #[test]
    fn two_folds_four_points() {
        let labels = [H, H, L, L];
        let a = stratified_folds(&labels, 2, 7).unwrap();
        for fold in 0..2 {
            let h = (0..4).filter(|&i| a[i] == fold && labels[i] == H).count();
            let l = (0..4).filter(|&i| a[i] == fold && labels[i] == L).count();
            assert_eq!((h, l), (1, 1));
        }
    }

    #[test]
    fn fold_sizes_balanced() {
        let labels: Vec<Label> = (0..53).map(|i| if i % 3 == 0 { L } else { H }).collect();
        let a = stratified_folds(&labels, 10, 1).unwrap();
        let sizes: Vec<usize> = (0..10).map(|f| a.iter().filter(|&&x| x == f).count()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(a, stratified_folds(&labels, 10, 1).unwrap());
    }

    #[test]
    fn too_few_examples() {
        assert!(matches!(
            stratified_folds(&[H, H, H, L], 2, 0),
            Err(EvalError::TooFewExamples { label: L, count: 1, folds: 2 })
        ));
        assert!(matches!(stratified_folds(&[H, L], 1, 0), Err(EvalError::InvalidFolds(1))));
    }
}
