use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    classification_metrics, ClassMetrics, ClassificationMetrics, Confusion, DEFAULT_THRESHOLD,
};
use super::roc_auc;
use crate::augment::AugmentScope;
use crate::corpus::{stratified_kfold, Dataset, Label};
use crate::error::{Error, Result};
use crate::models::{fit_model, ModelConfig};
use crate::teacher::TeacherTargets;
use crate::textprep::{FeatureVector, Vectorizer, VectorizerConfig};

/// Everything fitted inside a fold: featurizer, model and augmentation policy.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSpec {
    /// Report row name; defaults to the model kind.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub vectorizer: VectorizerConfig,
    pub model: ModelConfig,
    pub augmentation: AugmentScope,
}

impl PipelineSpec {
    pub fn new(model: ModelConfig) -> Self {
        PipelineSpec {
            model,
            ..Default::default()
        }
    }

    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.model.name().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: ClassificationMetrics,
    pub auc: Option<f64>,
}

/// Cross-validated scores of one pipeline: fold means plus per-fold detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub dataset: String,
    pub augmented: bool,
    pub k: usize,
    pub seed: u64,
    /// Held-out predictions scored, summed over folds.
    pub n_evaluated: usize,
    #[serde(rename = "false")]
    pub fake: ClassMetrics,
    #[serde(rename = "true")]
    pub truth: ClassMetrics,
    pub accuracy: f64,
    /// Fold-mean AUC; absent when some fold held a single class.
    pub auc: Option<f64>,
    /// Pooled over folds.
    pub confusion: Confusion,
    pub folds: Vec<FoldReport>,
}

/// Stratified k-fold cross-validation of `spec` on `dataset`.
///
/// The vectorizer and model are fitted on the training folds only. Records
/// produced by augmentation (those with a `parent_id`) follow the spec's
/// scope: under `train_folds_only` the split is made over originals, each
/// product joins the training set with its parent and products are never
/// scored; under `whole_dataset` they are split like any other record.
///
/// `teacher` is required by distilled students. A product without its own
/// target inherits its parent's.
pub fn cross_validate(
    spec: &PipelineSpec,
    dataset: &Dataset,
    teacher: Option<&TeacherTargets>,
    k: usize,
    seed: u64,
) -> Result<MetricsReport> {
    if spec.model.needs_teacher() && teacher.is_none() {
        return Err(Error::InvalidArgument(
            "a distilled model needs teacher targets".into(),
        ));
    }
    let records = dataset.records();
    let augmented = records.iter().any(|r| r.is_augmented());
    let split_on_originals = augmented && spec.augmentation == AugmentScope::TrainFoldsOnly;

    let population: Vec<usize> = (0..records.len())
        .filter(|&i| !split_on_originals || !records[i].is_augmented())
        .collect();
    let population_set = dataset.subset(&population);
    let (fake, truth) = population_set.class_counts();
    if k > fake.min(truth) {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the smaller class size ({} fake, {} true)",
            fake, truth
        )));
    }
    let plan = stratified_kfold(&population_set, k, seed)?;

    let folds: Vec<FoldReport> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let held_out: HashSet<&str> = plan.folds[fold].iter().map(String::as_str).collect();
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (i, r) in records.iter().enumerate() {
                let key = match (&r.parent_id, split_on_originals) {
                    (Some(parent), true) => parent.as_str(),
                    _ => r.id.as_str(),
                };
                if !held_out.contains(key) {
                    train.push(i);
                } else if !(split_on_originals && r.is_augmented()) {
                    test.push(i);
                }
            }
            run_fold(spec, dataset, teacher, fold, &train, &test)
        })
        .collect::<Result<_>>()?;

    Ok(aggregate(spec, dataset, augmented, k, seed, folds))
}

fn run_fold(
    spec: &PipelineSpec,
    dataset: &Dataset,
    teacher: Option<&TeacherTargets>,
    fold: usize,
    train: &[usize],
    test: &[usize],
) -> Result<FoldReport> {
    let records = dataset.records();
    let vectorizer = Vectorizer::fit_texts(
        train.iter().map(|&i| records[i].text.as_str()),
        &spec.vectorizer,
    )?;
    let rows = |idx: &[usize]| -> Vec<FeatureVector> {
        idx.iter()
            .map(|&i| vectorizer.transform_text(&records[i].text))
            .collect()
    };
    let labels = |idx: &[usize]| -> Vec<bool> {
        idx.iter()
            .map(|&i| records[i].label == Label::True)
            .collect()
    };

    let train_rows = rows(train);
    let train_labels = labels(train);
    let soft = match (teacher, spec.model.needs_teacher()) {
        (Some(t), true) => Some(teacher_column(t, dataset, train)?),
        _ => None,
    };
    let model = fit_model(&spec.model, &train_rows, &train_labels, soft.as_deref())?;

    let test_labels = labels(test);
    let scores: Vec<f64> = rows(test).iter().map(|x| model.proba(x)).collect();
    let metrics = classification_metrics(&scores, &test_labels, DEFAULT_THRESHOLD)?;
    let auc = match roc_auc(&scores, &test_labels) {
        Ok(v) => Some(v),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(FoldReport {
        fold,
        n_train: train.len(),
        n_test: test.len(),
        metrics,
        auc,
    })
}

fn teacher_column(teacher: &TeacherTargets, dataset: &Dataset, idx: &[usize]) -> Result<Vec<f64>> {
    let records = dataset.records();
    teacher.for_records(idx.iter().map(|&i| &records[i]))
}

fn aggregate(
    spec: &PipelineSpec,
    dataset: &Dataset,
    augmented: bool,
    k: usize,
    seed: u64,
    folds: Vec<FoldReport>,
) -> MetricsReport {
    let n = folds.len() as f64;
    let mean = |f: &dyn Fn(&FoldReport) -> f64| folds.iter().map(f).sum::<f64>() / n;
    let class_mean = |pick: &dyn Fn(&ClassificationMetrics) -> ClassMetrics| ClassMetrics {
        precision: mean(&|r| pick(&r.metrics).precision),
        recall: mean(&|r| pick(&r.metrics).recall),
        f1: mean(&|r| pick(&r.metrics).f1),
        support: folds.iter().map(|r| pick(&r.metrics).support).sum(),
        degenerate: folds.iter().any(|r| pick(&r.metrics).degenerate),
    };
    let mut confusion = Confusion::default();
    for f in &folds {
        confusion.add(&f.metrics.confusion);
    }
    let auc = folds
        .iter()
        .map(|f| f.auc)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.iter().sum::<f64>() / n);
    MetricsReport {
        model: spec.display_name(),
        dataset: dataset.name.clone(),
        augmented,
        k,
        seed,
        n_evaluated: confusion.total(),
        fake: class_mean(&|m| m.fake),
        truth: class_mean(&|m| m.truth),
        accuracy: mean(&|r| r.metrics.accuracy),
        auc,
        confusion,
        folds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ClaimRecord;
    use crate::models::TreeConfig;

    fn corpus(n_fake: usize, n_true: usize) -> Dataset {
        let mut records = Vec::new();
        for i in 0..n_fake {
            records.push(ClaimRecord::new(
                format!("f{i}"),
                format!("hoax miracle cure number{i}"),
                Label::Fake,
            ));
        }
        for i in 0..n_true {
            records.push(ClaimRecord::new(
                format!("t{i}"),
                format!("study vaccine trial number{i}"),
                Label::True,
            ));
        }
        Dataset::new("toy", records).unwrap()
    }

    #[test]
    fn constant_model_scores_prevalence() {
        let data = corpus(30, 20);
        let spec = PipelineSpec::new(ModelConfig::Tree(TreeConfig {
            max_depth: 0,
            min_leaf: 1,
        }));
        let report = cross_validate(&spec, &data, None, 5, 1).unwrap();
        assert!((report.accuracy - 0.6).abs() <= 1.0 / 50.0);
        assert!(report.truth.degenerate);
        assert_eq!(report.auc, Some(0.5));
        assert_eq!(report.n_evaluated, 50);
    }

    #[test]
    fn separable_and_deterministic() {
        let data = corpus(20, 20);
        let spec = PipelineSpec::default();
        let a = cross_validate(&spec, &data, None, 4, 3).unwrap();
        assert_eq!(a.accuracy, 1.0);
        assert_eq!(a.auc, Some(1.0));
        assert_eq!(a.folds.len(), 4);
        let b = cross_validate(&spec, &data, None, 4, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn k_bounded_by_minority_class() {
        let data = corpus(12, 3);
        assert!(cross_validate(&PipelineSpec::default(), &data, None, 4, 0).is_err());
        assert!(cross_validate(&PipelineSpec::default(), &data, None, 3, 0).is_ok());
    }

    #[test]
    fn products_stay_out_of_held_out_folds() {
        let base = corpus(6, 6);
        let mut records = base.records().to_vec();
        for r in base.records() {
            let mut p = ClaimRecord::new(
                format!("{}~bt-de", r.id),
                format!("{} paraphrased", r.text),
                r.label,
            );
            p.parent_id = Some(r.id.clone());
            records.push(p);
        }
        let data = Dataset::new("aug", records).unwrap();
        let report = cross_validate(&PipelineSpec::default(), &data, None, 3, 0).unwrap();
        assert!(report.augmented);
        assert_eq!(report.n_evaluated, 12);
        for f in &report.folds {
            assert_eq!(f.n_test, 4);
            assert_eq!(f.n_train, 16);
        }
        let whole = PipelineSpec {
            augmentation: AugmentScope::WholeDataset,
            ..Default::default()
        };
        let report = cross_validate(&whole, &data, None, 3, 0).unwrap();
        assert_eq!(report.n_evaluated, 24);
    }

    #[test]
    fn distilled_needs_teacher() {
        let data = corpus(6, 6);
        let spec = PipelineSpec::new(ModelConfig::Distilled(Default::default()));
        assert!(cross_validate(&spec, &data, None, 3, 0).is_err());
    }
}
