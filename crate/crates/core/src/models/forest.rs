use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, TreeConfig, TreeModel};
use super::{check_both_classes, check_rows, Features};
use crate::error::{Error, Result};
use crate::textprep::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Share of the node's varying features examined at each split.
    pub feature_fraction: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 1,
            feature_fraction: 0.5,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn tree_config(&self) -> TreeConfig {
        TreeConfig {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub n_features: usize,
    pub config: ForestConfig,
}

impl ForestModel {
    pub fn from_trees(trees: Vec<TreeModel>, config: ForestConfig) -> Result<Self> {
        let first = trees
            .first()
            .ok_or_else(|| Error::InvalidArgument("a forest needs at least one tree".into()))?;
        let n_features = first.n_features;
        if let Some(t) = trees.iter().find(|t| t.n_features != n_features) {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                found: t.n_features,
            });
        }
        Ok(ForestModel {
            trees,
            n_features,
            config,
        })
    }

    /// Mean of the trees' leaf probabilities.
    pub fn proba<F: Features + ?Sized>(&self, x: &F) -> f64 {
        self.trees.iter().map(|t| t.proba(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// Mean of the trees' log-odds.
    pub fn margin<F: Features + ?Sized>(&self, x: &F) -> f64 {
        self.trees.iter().map(|t| t.margin(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Random forest of CART trees. Each tree draws from its own ChaCha stream
/// (`seed`, tree index), so the result does not depend on scheduling.
pub fn train_forest(
    rows: &[FeatureVector],
    labels: &[bool],
    config: &ForestConfig,
) -> Result<ForestModel> {
    if config.n_trees == 0 {
        return Err(Error::InvalidArgument("n_trees must be positive".into()));
    }
    if !(config.feature_fraction > 0.0 && config.feature_fraction <= 1.0) {
        return Err(Error::InvalidArgument(
            "feature_fraction must lie in (0, 1]".into(),
        ));
    }
    check_rows(rows, labels.len())?;
    check_both_classes(labels)?;
    let tree_config = config.tree_config();
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let weights = if config.bootstrap {
                bootstrap_weights(&mut rng, labels)
            } else {
                vec![1.0; rows.len()]
            };
            grow(
                rows,
                labels,
                &weights,
                &tree_config,
                Some((&mut rng, config.feature_fraction)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ForestModel::from_trees(trees, config.clone())
}

/// Sample counts of a bootstrap resample. Redrawn (on the same stream) until
/// both classes are present.
fn bootstrap_weights(rng: &mut ChaCha8Rng, labels: &[bool]) -> Vec<f64> {
    let n = labels.len();
    loop {
        let mut weights = vec![0.0; n];
        for _ in 0..n {
            weights[rng.gen_range(0..n)] += 1.0;
        }
        let has = |class: bool| {
            labels
                .iter()
                .zip(&weights)
                .any(|(&y, &w)| y == class && w > 0.0)
        };
        if has(true) && has(false) {
            return weights;
        }
    }
}
