use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use codeorigin::classifiers::{ForestParams, LogisticParams, SvmParams, TreeParams};
use codeorigin::harness::ToolchainConfig;
use codeorigin::{Language, ModelKind, ModelSpec};
use serde::{Deserialize, Serialize};

/// Everything that determines a run. Loaded from `--config`, then
/// overridden by flags; reports embed the resolved value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub language: Option<Language>,
    pub folds: usize,
    pub min_doc_freq: usize,
    /// Directory of `<lang>.keywords` files replacing the builtin lists.
    pub profiles: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub models: ModelsConfig,
    pub toolchain: Option<ToolchainConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub logistic: LogisticParams,
    pub svm: SvmParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            language: None,
            folds: 10,
            min_doc_freq: codeorigin::features::DEFAULT_MIN_DOC_FREQ,
            profiles: None,
            jobs: None,
            models: ModelsConfig::default(),
            toolchain: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// The model spec for `kind`; stochastic models take the run seed.
    pub fn spec(&self, kind: ModelKind) -> ModelSpec {
        let m = &self.models;
        match kind {
            ModelKind::Tree => ModelSpec::Tree(m.tree.clone()),
            ModelKind::Forest => ModelSpec::Forest(ForestParams {
                seed: self.seed,
                ..m.forest.clone()
            }),
            ModelKind::Logistic => ModelSpec::Logistic(LogisticParams {
                seed: self.seed,
                ..m.logistic.clone()
            }),
            ModelKind::Svm => ModelSpec::Svm(SvmParams {
                seed: self.seed,
                ..m.svm.clone()
            }),
        }
    }
}
