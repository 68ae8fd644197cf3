use std::collections::HashSet;

use claimlens::corpus::{kfold, stratified_kfold, ClaimRecord, Dataset, Label};
use claimlens::eval::roc_auc;
use claimlens::models::{LogisticModel, LogisticObjective, Model, Node, TreeConfig, TreeModel};
use claimlens::textprep::{FeatureVector, Vectorizer, VectorizerConfig};
use proptest::prelude::*;

fn label(truth: bool) -> Label {
    if truth {
        Label::True
    } else {
        Label::Fake
    }
}

fn dataset(labels: &[bool]) -> Dataset {
    let records = labels
        .iter()
        .enumerate()
        .map(|(i, &t)| ClaimRecord::new(format!("c{i}"), format!("claim number {i}"), label(t)))
        .collect();
    Dataset::new("prop", records).unwrap()
}

const WORDS: [&str; 8] = [
    "vaccine", "garlic", "ministry", "hoax", "water", "cure", "trial", "rumour",
];

fn text_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(&WORDS[..]), 1..8).prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folds_partition_the_dataset(
        labels in prop::collection::vec(any::<bool>(), 4..60),
        k in 2usize..6,
        seed in any::<u64>(),
        stratified in any::<bool>(),
    ) {
        let data = dataset(&labels);
        prop_assume!(k <= data.len());
        let plan = if stratified { stratified_kfold(&data, k, seed) } else { kfold(&data, k, seed) };
        let plan = plan.unwrap();
        prop_assert_eq!(plan.k(), k);
        let mut seen = HashSet::new();
        for fold in &plan.folds {
            for id in fold {
                prop_assert!(seen.insert(id.clone()), "{} appears twice", id);
            }
        }
        prop_assert_eq!(seen.len(), data.len());
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        if stratified {
            for truth in [true, false] {
                let per_fold: Vec<usize> = plan
                    .folds
                    .iter()
                    .map(|f| f.iter().filter(|id| data.get(id).unwrap().label == label(truth)).count())
                    .collect();
                prop_assert!(per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap() <= 1);
            }
        }
        for fold in 0..k {
            let (train, test) = plan.fold_indices(&data, fold);
            prop_assert_eq!(train.len() + test.len(), data.len());
        }
    }

    #[test]
    fn tfidf_rows_are_unit_or_zero(
        corpus in prop::collection::vec(text_strategy(), 1..12),
        query in text_strategy(),
    ) {
        let vectorizer = Vectorizer::fit_texts(corpus.iter().map(String::as_str), &VectorizerConfig::default()).unwrap();
        for text in corpus.iter().chain(std::iter::once(&query)) {
            let v = vectorizer.transform_text(text);
            prop_assert_eq!(v.dim(), vectorizer.dim());
            prop_assert!(v.values().iter().all(|&x| x > 0.0));
            prop_assert!(v.is_zero() || (v.norm() - 1.0).abs() < 1e-12);
        }
        for idf in vectorizer.idf() {
            prop_assert!(*idf >= 1.0);
        }
    }

    #[test]
    fn auc_ignores_monotone_transforms(
        pairs in prop::collection::vec((0u8..20, any::<bool>()), 2..80),
    ) {
        let labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let scores: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 20.0).collect();
        let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s - 1.0).tanh() * 7.0 + 2.0).collect();
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let a = roc_auc(&scores, &labels).unwrap();
        prop_assert_eq!(a, roc_auc(&squashed, &labels).unwrap());
        prop_assert!((a + roc_auc(&scores, &flipped).unwrap() - 1.0).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn probabilities_stay_in_unit_interval(
        weights in prop::collection::vec(-50.0f64..50.0, 1..10),
        bias in -50.0f64..50.0,
        leaf in 0.0f64..=1.0,
        x in prop::collection::vec(0.0f64..1.0, 10),
    ) {
        let d = weights.len();
        let logistic = Model::Logistic(LogisticModel::new(weights, bias));
        let p = logistic.predict_proba(&x[..d]).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let tree = Model::Tree(TreeModel {
            nodes: vec![
                Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2 },
                Node::Leaf { p_true: leaf, samples: 1.0 },
                Node::Leaf { p_true: 1.0 - leaf, samples: 1.0 },
            ],
            n_features: d,
            config: TreeConfig::default(),
        });
        let q = tree.predict_proba(&x[..d]).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!(tree.margin(&x[..d]).is_finite());
    }

    #[test]
    fn soft_loss_is_minimised_at_the_teacher(
        teacher in 0.02f64..0.98,
        temperature in 0.5f64..4.0,
        offset in -3.0f64..3.0,
    ) {
        let rows = vec![FeatureVector::zeros(1)];
        let objective = LogisticObjective {
            rows: &rows,
            hard: &[1.0],
            soft: &[teacher],
            distill_weight: 1.0,
            temperature,
            l2_penalty: 0.0,
        };
        let at_teacher = (teacher / (1.0 - teacher)).ln();
        let best = objective.evaluate(&[0.0], at_teacher);
        let other = objective.evaluate(&[0.0], at_teacher + offset);
        prop_assert!(other.loss >= best.loss - 1e-12);
        prop_assert!(best.grad_bias.abs() < 1e-9);
    }
}

#[test]
fn label_round_trip() {
    for label in [Label::True, Label::Fake] {
        assert_eq!(Label::parse(label.as_str()), Some(label));
    }
}
