use std::path::Path;

use anyhow::Context;
use claimlens::augment::{AugmentScope, DEFAULT_PIVOT};
use claimlens::eval::ReportFormat;
use claimlens::explain::{CardFormat, Method, Tier, DEFAULT_TOP_K};
use claimlens::models::{ForestConfig, TrainConfig, TreeConfig};
use claimlens::textprep::VectorizerConfig;
use serde::{Deserialize, Serialize};

/// Settings for every subcommand. Loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub vectorizer: VectorizerConfig,
    pub logistic: TrainConfig,
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub augment: AugmentSettings,
    pub eval: EvalSettings,
    pub explain: ExplainSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSettings {
    pub pivot: String,
    pub scope: AugmentScope,
    pub max_concurrency: usize,
    pub timeout_secs: u64,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        AugmentSettings {
            pivot: DEFAULT_PIVOT.to_string(),
            scope: AugmentScope::default(),
            max_concurrency: 4,
            timeout_secs: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub k: usize,
    pub models: Vec<String>,
    pub reports: Vec<ReportFormat>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            k: 10,
            models: vec!["logistic".into()],
            reports: vec![ReportFormat::Markdown],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSettings {
    /// Chosen from the model kind when absent.
    pub method: Option<Method>,
    pub tier: Tier,
    pub format: CardFormat,
    pub top_k: usize,
    pub samples: usize,
    pub background_size: usize,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        ExplainSettings {
            method: None,
            tier: Tier::Tse,
            format: CardFormat::Terminal,
            top_k: DEFAULT_TOP_K,
            samples: 1000,
            background_size: 100,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Routes the run seed into every seeded component.
    pub fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        self.logistic.seed = self.seed;
        self.forest.seed = self.seed;
    }
}
