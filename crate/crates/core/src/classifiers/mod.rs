//! Binary classifiers: gain-ratio decision tree, random forest, L2
//! logistic regression and a linear SVM. `llm` is the positive class and a
//! score of exactly 0.5 predicts it.

mod linear;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{schema_fingerprint, Dataset, FeatureVector, Label};

pub use linear::{logistic_loss_and_gradient, sigmoid, LinearModel, Standardizer};
pub use tree::{bootstrap, forest_bootstrap, forest_rng, forest_score, DecisionTree, TreeNode};

use tree::TreeOptions;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data needs both human and llm examples")]
    DegenerateData,
    #[error("training data needs at least 2 examples, got {0}")]
    TooFewExamples(usize),
    #[error("training row `{0}` is unlabeled")]
    UnlabeledRow(String),
    #[error("feature schema mismatch: model expects {expected}, input has {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tree,
    Forest,
    Logistic,
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Forest, ModelKind::Svm, ModelKind::Logistic, ModelKind::Tree];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Logistic => "logistic",
            ModelKind::Svm => "svm",
        }
    }

    /// Row heading in ablation tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Tree => "Decision Tree",
            ModelKind::Forest => "Random Forest",
            ModelKind::Logistic => "Logistic",
            ModelKind::Svm => "Linear SVM",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tree" | "j48" => Ok(ModelKind::Tree),
            "forest" | "rf" => Ok(ModelKind::Forest),
            "logistic" => Ok(ModelKind::Logistic),
            "svm" | "smo" => Ok(ModelKind::Svm),
            other => Err(format!("unknown model `{other}` (expected tree, forest, logistic or svm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` means `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            features_per_split: None,
            max_depth: None,
            min_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2: 1e-3,
            epochs: 50,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Pegasos regularization strength.
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-2,
            epochs: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Tree(TreeParams),
    Forest(ForestParams),
    Logistic(LogisticParams),
    Svm(SvmParams),
}

impl ModelSpec {
    /// Defaults for `kind`, with `seed` for the stochastic ones.
    pub fn default_for(kind: ModelKind, seed: u64) -> ModelSpec {
        match kind {
            ModelKind::Tree => ModelSpec::Tree(TreeParams::default()),
            ModelKind::Forest => ModelSpec::Forest(ForestParams {
                seed,
                ..ForestParams::default()
            }),
            ModelKind::Logistic => ModelSpec::Logistic(LogisticParams {
                seed,
                ..LogisticParams::default()
            }),
            ModelKind::Svm => ModelSpec::Svm(SvmParams {
                seed,
                ..SvmParams::default()
            }),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Tree(_) => ModelKind::Tree,
            ModelSpec::Forest(_) => ModelKind::Forest,
            ModelSpec::Logistic(_) => ModelKind::Logistic,
            ModelSpec::Svm(_) => ModelKind::Svm,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidHyperparameter(m.to_string()));
        let check_tree = |max_depth: Option<usize>, min_leaf: usize| {
            if max_depth == Some(0) {
                return bad("max_depth must be positive");
            }
            if min_leaf == 0 {
                return bad("min_leaf must be positive");
            }
            Ok(())
        };
        match self {
            ModelSpec::Tree(p) => check_tree(p.max_depth, p.min_leaf),
            ModelSpec::Forest(p) => {
                check_tree(p.max_depth, p.min_leaf)?;
                if p.n_trees == 0 {
                    return bad("n_trees must be positive");
                }
                if p.features_per_split == Some(0) {
                    return bad("features_per_split must be positive");
                }
                Ok(())
            }
            ModelSpec::Logistic(p) => {
                if !(p.l2 >= 0.0 && p.l2.is_finite()) {
                    return bad("l2 must be a finite non-negative number");
                }
                if p.epochs == 0 {
                    return bad("epochs must be positive");
                }
                if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
                    return bad("learning_rate must be positive");
                }
                Ok(())
            }
            ModelSpec::Svm(p) => {
                if !(p.lambda > 0.0 && p.lambda.is_finite()) {
                    return bad("lambda must be positive");
                }
                if p.epochs == 0 {
                    return bad("epochs must be positive");
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelParams {
    Tree(DecisionTree),
    Forest { trees: Vec<DecisionTree> },
    Linear(LinearModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub schema_fingerprint: String,
    pub n_features: usize,
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

pub fn label_for_score(score: f64) -> Label {
    if score >= 0.5 {
        Label::Llm
    } else {
        Label::Human
    }
}

/// Trains on a raw matrix. `y[i]` is true for `llm`.
pub fn train_matrix(
    spec: &ModelSpec,
    x: &[Vec<f64>],
    y: &[bool],
    schema_fingerprint: String,
) -> Result<TrainedModel, ClassifierError> {
    spec.validate()?;
    if x.len() < 2 {
        return Err(ClassifierError::TooFewExamples(x.len()));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(ClassifierError::DegenerateData);
    }
    let d = x[0].len();
    let params = match spec {
        ModelSpec::Tree(p) => ModelParams::Tree(tree::grow_tree(
            x,
            y,
            (0..x.len()).collect(),
            TreeOptions {
                max_depth: p.max_depth,
                min_leaf: p.min_leaf,
                features_per_split: None,
            },
            None,
        )),
        ModelSpec::Forest(p) => {
            let k = p
                .features_per_split
                .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
                .clamp(1, d.max(1));
            ModelParams::Forest {
                trees: tree::grow_forest(
                    x,
                    y,
                    p.n_trees,
                    p.seed,
                    TreeOptions {
                        max_depth: p.max_depth,
                        min_leaf: p.min_leaf,
                        features_per_split: Some(k),
                    },
                ),
            }
        }
        ModelSpec::Logistic(p) => {
            ModelParams::Linear(linear::train_logistic(x, y, p.l2, p.epochs, p.learning_rate, p.seed))
        }
        ModelSpec::Svm(p) => ModelParams::Linear(linear::train_svm(x, y, p.lambda, p.epochs, p.seed)),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        schema_fingerprint,
        n_features: d,
        params,
    })
}

/// Splits a dataset into a matrix and positive-class flags.
pub fn to_matrix(data: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<bool>), ClassifierError> {
    let mut x = Vec::with_capacity(data.len());
    let mut y = Vec::with_capacity(data.len());
    for v in &data.vectors {
        if v.label == Label::Unlabeled {
            return Err(ClassifierError::UnlabeledRow(v.path.clone()));
        }
        x.push(v.values.clone());
        y.push(v.label.is_positive());
    }
    Ok((x, y))
}

pub fn train(spec: &ModelSpec, data: &Dataset) -> Result<TrainedModel, ClassifierError> {
    let (x, y) = to_matrix(data)?;
    train_matrix(spec, &x, &y, data.fingerprint())
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    /// Score in [0, 1] for a row already known to match the schema.
    pub fn score_row(&self, x: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Tree(t) => t.score(x),
            ModelParams::Forest { trees } => forest_score(trees, x),
            ModelParams::Linear(m) => sigmoid(m.margin(x)),
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> Prediction {
        let score = self.score_row(x);
        Prediction {
            label: label_for_score(score),
            score,
        }
    }

    fn check_schema(&self, fingerprint: &str) -> Result<(), ClassifierError> {
        if fingerprint != self.schema_fingerprint {
            return Err(ClassifierError::SchemaMismatch {
                expected: self.schema_fingerprint.clone(),
                found: fingerprint.to_string(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, v: &FeatureVector) -> Result<Prediction, ClassifierError> {
        self.check_schema(&schema_fingerprint(&v.names))?;
        Ok(self.predict_row(&v.values))
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<Prediction>, ClassifierError> {
        self.check_schema(&data.fingerprint())?;
        Ok(data.vectors.iter().map(|v| self.predict_row(&v.values)).collect())
    }

    pub fn to_json(&self) -> Result<String, ClassifierError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<TrainedModel, ClassifierError> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::UnsupportedVersion(model.format_version));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn dataset(rows: &[(Vec<f64>, Label)]) -> Dataset {
        let d = rows[0].0.len();
        let names: Arc<[String]> = (0..d).map(|i| format!("f{i}")).collect();
        Dataset {
            names: Arc::clone(&names),
            vectors: rows
                .iter()
                .enumerate()
                .map(|(i, (v, l))| FeatureVector {
                    path: format!("r{i}"),
                    label: *l,
                    names: Arc::clone(&names),
                    values: v.clone(),
                })
                .collect(),
        }
    }

    fn separable_1d() -> Dataset {
        let rows: Vec<_> = [0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9, 1.0]
            .iter()
            .map(|&v| (vec![v], if v > 0.5 { Label::Llm } else { Label::Human }))
            .collect();
        dataset(&rows)
    }

    #[test]
    fn tree_on_separable_threshold() {
        let ds = separable_1d();
        let m = train(&ModelSpec::default_for(ModelKind::Tree, 0), &ds).unwrap();
        let ModelParams::Tree(t) = &m.params else { panic!() };
        assert!(matches!(t.nodes[0], TreeNode::Split { threshold, .. } if (threshold - 0.5).abs() < 1e-12));
        for (p, v) in m.predict_dataset(&ds).unwrap().iter().zip(&ds.vectors) {
            assert_eq!(p.label, v.label);
            assert!(if v.label == Label::Llm { p.score >= 0.5 } else { p.score < 0.5 });
        }
    }

    #[test]
    fn every_kind_learns_the_threshold() {
        let ds = separable_1d();
        for kind in ModelKind::ALL {
            let m = train(&ModelSpec::default_for(kind, 3), &ds).unwrap();
            let preds = m.predict_dataset(&ds).unwrap();
            let correct = preds.iter().zip(&ds.vectors).filter(|(p, v)| p.label == v.label).count();
            assert_eq!(correct, ds.len(), "{kind}");
        }
    }

    #[test]
    fn logistic_symmetric_points() {
        let ds = dataset(&[(vec![-1.0], Label::Human), (vec![1.0], Label::Llm)]);
        let m = train(&ModelSpec::default_for(ModelKind::Logistic, 9), &ds).unwrap();
        let ModelParams::Linear(lin) = &m.params else { panic!() };
        assert!(lin.weights[0] > 0.0);
        // boundary at x = 0 up to the order the two points were visited
        assert!(lin.bias.abs() < 0.05 * lin.weights[0], "{lin:?}");
        let preds = m.predict_dataset(&ds).unwrap();
        assert_eq!(preds[0].label, Label::Human);
        assert_eq!(preds[1].label, Label::Llm);
    }

    #[test]
    fn tie_score_is_llm() {
        assert_eq!(label_for_score(0.5), Label::Llm);
        assert_eq!(label_for_score(0.4999999), Label::Human);
        let t = DecisionTree {
            nodes: vec![TreeNode::Leaf {
                positives: 1,
                total: 2,
            }],
        };
        assert_eq!(t.score(&[0.0]), 0.5);
    }

    #[test]
    fn forest_vote_fraction() {
        let yes = DecisionTree {
            nodes: vec![TreeNode::Leaf {
                positives: 3,
                total: 3,
            }],
        };
        let no = DecisionTree {
            nodes: vec![TreeNode::Leaf {
                positives: 0,
                total: 3,
            }],
        };
        let mut trees = vec![yes; 7];
        trees.extend(vec![no; 3]);
        assert_eq!(forest_score(&trees, &[0.0]), 0.7);
    }

    #[test]
    fn errors() {
        let one_class = dataset(&[(vec![0.0], Label::Human), (vec![1.0], Label::Human)]);
        assert!(matches!(
            train(&ModelSpec::default_for(ModelKind::Tree, 0), &one_class),
            Err(ClassifierError::DegenerateData)
        ));
        let one = dataset(&[(vec![0.0], Label::Human)]);
        assert!(matches!(
            train(&ModelSpec::default_for(ModelKind::Svm, 0), &one),
            Err(ClassifierError::TooFewExamples(1))
        ));
        let bad = ModelSpec::Forest(ForestParams {
            n_trees: 0,
            ..ForestParams::default()
        });
        assert!(matches!(train(&bad, &separable_1d()), Err(ClassifierError::InvalidHyperparameter(_))));

        let m = train(&ModelSpec::default_for(ModelKind::Tree, 0), &separable_1d()).unwrap();
        let other = dataset(&[(vec![0.0, 1.0], Label::Human)]);
        assert!(matches!(m.predict(&other.vectors[0]), Err(ClassifierError::SchemaMismatch { .. })));
    }

    #[test]
    fn constant_feature_is_ignored() {
        let rows: Vec<_> = (0..10)
            .map(|i| (vec![7.0, i as f64], if i >= 5 { Label::Llm } else { Label::Human }))
            .collect();
        let ds = dataset(&rows);
        for kind in ModelKind::ALL {
            let m = train(&ModelSpec::default_for(kind, 1), &ds).unwrap();
            match &m.params {
                ModelParams::Tree(t) => assert!(t.nodes.iter().all(|n| !matches!(n, TreeNode::Split { feature: 0, .. }))),
                ModelParams::Linear(l) => assert_eq!(l.weights[0], 0.0),
                ModelParams::Forest { trees } => assert!(trees
                    .iter()
                    .all(|t| t.nodes.iter().all(|n| !matches!(n, TreeNode::Split { feature: 0, .. })))),
            }
        }
    }

    #[test]
    fn persistence_round_trips_exactly() {
        let ds = separable_1d();
        for kind in ModelKind::ALL {
            let m = train(&ModelSpec::default_for(kind, 5), &ds).unwrap();
            let text = m.to_json().unwrap();
            let back = TrainedModel::from_json(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_json().unwrap(), text);
        }
        let mut m = train(&ModelSpec::default_for(ModelKind::Tree, 0), &ds).unwrap();
        m.format_version = 99;
        assert!(matches!(
            TrainedModel::from_json(&m.to_json().unwrap()),
            Err(ClassifierError::UnsupportedVersion(99))
        ));
    }

    #[test]
    fn forest_of_one_matches_tree_on_its_bootstrap() {
        let rows: Vec<_> = (0..40)
            .map(|i| {
                let a = ((i * 37) % 11) as f64;
                let b = ((i * 17) % 7) as f64;
                let c = (i % 5) as f64;
                (vec![a, b, c], if a + 2.0 * b > 12.0 { Label::Llm } else { Label::Human })
            })
            .collect();
        let ds = dataset(&rows);
        let (x, y) = to_matrix(&ds).unwrap();
        let seed = 42;
        let forest = train(
            &ModelSpec::Forest(ForestParams {
                n_trees: 1,
                features_per_split: Some(3),
                seed,
                ..ForestParams::default()
            }),
            &ds,
        )
        .unwrap();
        let boot = forest_bootstrap(seed, 0, x.len());
        let bx: Vec<_> = boot.iter().map(|&i| x[i].clone()).collect();
        let by: Vec<_> = boot.iter().map(|&i| y[i]).collect();
        let tree = train_matrix(&ModelSpec::default_for(ModelKind::Tree, 0), &bx, &by, ds.fingerprint()).unwrap();
        for row in &x {
            assert_eq!(forest.predict_row(row).label, tree.predict_row(row).label);
        }
    }

    proptest! {
        #[test]
        fn tree_fits_consistent_data_and_ignores_row_order(
            points in proptest::collection::btree_map((0i32..20, 0i32..20), any::<bool>(), 2..40),
            seed in any::<u64>(),
        ) {
            prop_assume!(points.values().any(|&b| b) && points.values().any(|&b| !b));
            let rows: Vec<_> = points
                .iter()
                .map(|(&(a, b), &l)| (vec![a as f64, b as f64], if l { Label::Llm } else { Label::Human }))
                .collect();
            let ds = dataset(&rows);
            let spec = ModelSpec::default_for(ModelKind::Tree, 0);
            let m = train(&spec, &ds).unwrap();
            for (p, v) in m.predict_dataset(&ds).unwrap().iter().zip(&ds.vectors) {
                prop_assert_eq!(p.label, v.label);
            }
            let mut shuffled = rows.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let m2 = train(&spec, &dataset(&shuffled)).unwrap();
            prop_assert_eq!(&m.params, &m2.params);
        }

        #[test]
        fn seeded_training_is_deterministic(seed in any::<u64>()) {
            let ds = separable_1d();
            for kind in [ModelKind::Forest, ModelKind::Logistic, ModelKind::Svm] {
                let spec = ModelSpec::default_for(kind, seed);
                prop_assert_eq!(train(&spec, &ds).unwrap(), train(&spec, &ds).unwrap());
            }
        }
    }
}
