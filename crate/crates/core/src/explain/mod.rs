//! Shapley-value attributions in log-odds space.
//!
//! All estimators share one interventional value function: for a coalition
//! `S`, the model is evaluated on each background row with the coordinates in
//! `S` replaced by the instance's values, and the results are averaged. Only
//! features whose instance value differs from at least one background row
//! can receive credit; every other feature is a dummy with exactly zero
//! attribution.

mod card;
mod exact;
mod linear;
mod sampling;
mod tree_shap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::models::{Features, Model};
use crate::textprep::FeatureVector;

pub use card::{
    render_card, CardFormat, ExplanationCard, ForcePlot, Provenance, Tier, WordColor,
    WordContribution, DEFAULT_TOP_K, UNAVAILABLE,
};
pub use exact::{coalition_value, exact_shapley, MAX_EXACT_PLAYERS};
pub use linear::linear_shap;
pub use sampling::sampling_shapley;
pub use tree_shap::tree_shap;

/// Reference distribution for attributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Background {
    rows: Vec<FeatureVector>,
    pub feature_means: Vec<f64>,
    /// Mean model output over the rows, in log-odds.
    pub base_logodds: f64,
    /// Mean predicted truth probability over the rows.
    pub base_probability: f64,
}

impl Background {
    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_means.len()
    }
}

pub fn build_background(model: &Model, rows: Vec<FeatureVector>) -> Result<Background> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "background needs at least one row".into(),
        ));
    }
    let dim = model.dim();
    for row in &rows {
        model.check_dim(row)?;
    }
    let n = rows.len() as f64;
    let mut sums = vec![0.0; dim];
    let mut margin_sum = 0.0;
    let mut prob_sum = 0.0;
    for row in &rows {
        for (i, v) in row.iter() {
            sums[i] += v;
        }
        margin_sum += model.margin(row);
        prob_sum += model.proba(row);
    }
    Ok(Background {
        feature_means: sums.into_iter().map(|s| s / n).collect(),
        base_logodds: margin_sum / n,
        base_probability: (prob_sum / n).clamp(0.0, 1.0),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LinearExact,
    BruteForce,
    TreeInterventional,
    Sampling,
}

impl Method {
    pub fn is_exact(self) -> bool {
        !matches!(self, Method::Sampling)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "linear" | "linear_exact" => Ok(Method::LinearExact),
            "exact" | "brute_force" => Ok(Method::BruteForce),
            "tree" | "tree_interventional" => Ok(Method::TreeInterventional),
            "sampling" => Ok(Method::Sampling),
            other => Err(Error::InvalidArgument(format!(
                "unknown attribution method \"{other}\""
            ))),
        }
    }
}

/// Per-feature Shapley values for one instance, in log-odds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub phi: Vec<f64>,
    pub base_logodds: f64,
    pub base_probability: f64,
    pub output_logodds: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Attribution {
    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    /// `base + Σφ − output`; zero up to rounding for exact methods.
    pub fn additivity_residual(&self) -> f64 {
        self.base_logodds + self.phi.iter().sum::<f64>() - self.output_logodds
    }

    pub fn output_probability(&self) -> f64 {
        sigmoid(self.output_logodds)
    }

    /// The JSON exchange form: non-zero φ entries labeled with words.
    pub fn to_document(&self, labels: &[String]) -> Result<AttributionDocument> {
        if labels.len() != self.phi.len() {
            return Err(Error::DimensionMismatch {
                expected: self.phi.len(),
                found: labels.len(),
            });
        }
        let phi = self
            .phi
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| PhiEntry {
                feature: i,
                word: labels[i].clone(),
                value: v,
            })
            .collect();
        Ok(AttributionDocument {
            base_logodds: self.base_logodds,
            base_probability: self.base_probability,
            output_logodds: self.output_logodds,
            phi,
            method: self.method,
            seed: self.seed,
            samples: self.samples,
            dim: self.phi.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiEntry {
    pub feature: usize,
    pub word: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionDocument {
    pub base_logodds: f64,
    pub base_probability: f64,
    pub output_logodds: f64,
    pub phi: Vec<PhiEntry>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub dim: usize,
}

impl AttributionDocument {
    pub fn into_attribution(self) -> Result<Attribution> {
        let mut phi = vec![0.0; self.dim];
        for entry in self.phi {
            if entry.feature >= self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: entry.feature + 1,
                });
            }
            phi[entry.feature] = entry.value;
        }
        Ok(Attribution {
            phi,
            base_logodds: self.base_logodds,
            base_probability: self.base_probability,
            output_logodds: self.output_logodds,
            method: self.method,
            samples: self.samples,
            seed: self.seed,
        })
    }
}

/// Features whose instance value differs from at least one background row.
pub(crate) fn varying_features(x: &[f64], background: &Background) -> Vec<usize> {
    let mut varying = vec![false; x.len()];
    let active: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    for row in background.rows() {
        // non-zero entries of the row
        for (i, v) in row.iter() {
            if x[i] != v {
                varying[i] = true;
            }
        }
        // non-zero entries of x where the row is zero
        for &i in &active {
            if !varying[i] && row.get(i) == 0.0 {
                varying[i] = true;
            }
        }
    }
    varying
        .iter()
        .enumerate()
        .filter(|(_, &v)| v)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn instance_dense<F: Features + ?Sized>(
    model: &Model,
    x: &F,
    background: &Background,
) -> Result<Vec<f64>> {
    model.check_dim(x)?;
    if background.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: background.dim(),
        });
    }
    Ok((0..x.dim()).map(|i| x.value(i)).collect())
}
