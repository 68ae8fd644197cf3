//! Trainable student models and their common prediction surface.
//!
//! Every model exposes a probability (`predict_proba`) and a log-odds score
//! (`margin`). Attributions are computed on the margin:
//!
//! * logistic: `β·x + bias`, and the probability is its sigmoid;
//! * tree: the log-odds of the leaf's class fraction (clamped to 1e-12);
//! * forest: the mean of its trees' margins, while `predict_proba` is the
//!   mean of their leaf probabilities.

mod forest;
mod logistic;
mod tree;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::textprep::FeatureVector;

pub use forest::{train_forest, ForestConfig, ForestModel};
pub use logistic::{
    distill_loss, soften, train_distilled, train_logistic, LogisticModel, LogisticObjective,
    Optimizer, TrainConfig, TrainingMeta,
};
pub use tree::{train_tree, Node, TreeConfig, TreeModel};

/// Read access to a feature row, sparse or dense.
pub trait Features {
    fn dim(&self) -> usize;
    fn value(&self, index: usize) -> f64;
    /// Dot product with a dense weight vector, summed in increasing index
    /// order so sparse and dense rows give bit-identical results.
    fn dot(&self, weights: &[f64]) -> f64;
}

impl Features for FeatureVector {
    fn dim(&self) -> usize {
        FeatureVector::dim(self)
    }

    fn value(&self, index: usize) -> f64 {
        self.get(index)
    }

    fn dot(&self, weights: &[f64]) -> f64 {
        FeatureVector::dot(self, weights)
    }
}

impl Features for [f64] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn value(&self, index: usize) -> f64 {
        self[index]
    }

    fn dot(&self, weights: &[f64]) -> f64 {
        self.iter().zip(weights).map(|(x, w)| x * w).sum()
    }
}

impl Features for Vec<f64> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn value(&self, index: usize) -> f64 {
        self[index]
    }

    fn dot(&self, weights: &[f64]) -> f64 {
        self.as_slice().dot(weights)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Logistic(LogisticModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Logistic(_) => "logistic",
            Model::Tree(_) => "tree",
            Model::Forest(_) => "forest",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Logistic(m) => m.dim(),
            Model::Tree(m) => m.n_features,
            Model::Forest(m) => m.n_features,
        }
    }

    /// Log-odds score; callers guarantee matching dimensions.
    pub fn margin<F: Features + ?Sized>(&self, x: &F) -> f64 {
        match self {
            Model::Logistic(m) => m.margin(x),
            Model::Tree(m) => m.margin(x),
            Model::Forest(m) => m.margin(x),
        }
    }

    /// Truth probability; callers guarantee matching dimensions.
    pub fn proba<F: Features + ?Sized>(&self, x: &F) -> f64 {
        match self {
            Model::Logistic(m) => sigmoid(m.margin(x)),
            Model::Tree(m) => m.proba(x),
            Model::Forest(m) => m.proba(x),
        }
    }

    pub fn predict_proba<F: Features + ?Sized>(&self, x: &F) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.proba(x))
    }

    pub fn check_dim<F: Features + ?Sized>(&self, x: &F) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and checks a model document: tree structure, feature indices
    /// and weight dimensions.
    pub fn from_json(json: &str) -> Result<Self> {
        let model: Model = serde_json::from_str(json)?;
        match &model {
            Model::Logistic(_) => {}
            Model::Tree(t) => t.validate()?,
            Model::Forest(f) => {
                if f.trees.is_empty() {
                    return Err(Error::InvalidArgument("forest has no trees".into()));
                }
                for t in &f.trees {
                    if t.n_features != f.n_features {
                        return Err(Error::DimensionMismatch {
                            expected: f.n_features,
                            found: t.n_features,
                        });
                    }
                    t.validate()?;
                }
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&json)
    }
}

impl From<LogisticModel> for Model {
    fn from(m: LogisticModel) -> Self {
        Model::Logistic(m)
    }
}

impl From<TreeModel> for Model {
    fn from(m: TreeModel) -> Self {
        Model::Tree(m)
    }
}

impl From<ForestModel> for Model {
    fn from(m: ForestModel) -> Self {
        Model::Forest(m)
    }
}

/// Which student to train, with its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Logistic(TrainConfig),
    /// Logistic student fitted to teacher probabilities.
    Distilled(TrainConfig),
    Tree(TreeConfig),
    Forest(ForestConfig),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Logistic(TrainConfig::default())
    }
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Logistic(_) => "logistic",
            ModelConfig::Distilled(_) => "distilled",
            ModelConfig::Tree(_) => "tree",
            ModelConfig::Forest(_) => "forest",
        }
    }

    pub fn needs_teacher(&self) -> bool {
        matches!(self, ModelConfig::Distilled(_))
    }
}

/// Trains the configured model. `teacher` holds one truth probability per row
/// and is required for (and only used by) the distilled student.
pub fn fit_model(
    config: &ModelConfig,
    rows: &[FeatureVector],
    labels: &[bool],
    teacher: Option<&[f64]>,
) -> Result<Model> {
    Ok(match config {
        ModelConfig::Logistic(cfg) => train_logistic(rows, labels, cfg)?.into(),
        ModelConfig::Distilled(cfg) => {
            let teacher = teacher.ok_or(Error::MissingTargets {
                count: rows.len(),
                sample: Vec::new(),
            })?;
            train_distilled(rows, labels, teacher, cfg)?.into()
        }
        ModelConfig::Tree(cfg) => train_tree(rows, labels, cfg)?.into(),
        ModelConfig::Forest(cfg) => train_forest(rows, labels, cfg)?.into(),
    })
}

pub(crate) fn check_rows(rows: &[FeatureVector], targets: usize) -> Result<usize> {
    let first = rows.first().ok_or(Error::SingleClass)?;
    if rows.len() != targets {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            found: targets,
        });
    }
    let dim = first.dim();
    for row in rows {
        if row.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.dim(),
            });
        }
    }
    Ok(dim)
}

pub(crate) fn check_both_classes(labels: &[bool]) -> Result<()> {
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(Error::SingleClass);
    }
    Ok(())
}
