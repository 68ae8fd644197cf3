use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decision threshold on the predicted truth probability.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// 2×2 confusion table with "true" as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }

    pub fn correct(&self) -> usize {
        self.true_positive + self.true_negative
    }

    pub fn add(&mut self, other: &Confusion) {
        self.true_positive += other.true_positive;
        self.false_positive += other.false_positive;
        self.true_negative += other.true_negative;
        self.false_negative += other.false_negative;
    }
}

/// Precision, recall and F1 of one class. A ratio with a zero denominator is
/// reported as 0 and sets `degenerate`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub degenerate: bool,
}

impl ClassMetrics {
    fn from_counts(hit: usize, predicted: usize, actual: usize) -> ClassMetrics {
        let mut degenerate = false;
        let mut ratio = |num: f64, den: f64| {
            if den == 0.0 {
                degenerate = true;
                0.0
            } else {
                num / den
            }
        };
        let precision = ratio(hit as f64, predicted as f64);
        let recall = ratio(hit as f64, actual as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        ClassMetrics {
            precision,
            recall,
            f1,
            support: actual,
            degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    #[serde(rename = "false")]
    pub fake: ClassMetrics,
    #[serde(rename = "true")]
    pub truth: ClassMetrics,
    pub accuracy: f64,
    pub confusion: Confusion,
}

impl ClassificationMetrics {
    pub fn from_confusion(confusion: Confusion) -> ClassificationMetrics {
        let c = confusion;
        ClassificationMetrics {
            fake: ClassMetrics::from_counts(
                c.true_negative,
                c.true_negative + c.false_negative,
                c.true_negative + c.false_positive,
            ),
            truth: ClassMetrics::from_counts(
                c.true_positive,
                c.true_positive + c.false_positive,
                c.true_positive + c.false_negative,
            ),
            accuracy: c.correct() as f64 / c.total() as f64,
            confusion,
        }
    }
}

/// Thresholded classification metrics. `labels[i]` is true for a true claim;
/// a prediction counts as true when `p_true >= threshold`.
pub fn classification_metrics(
    p_true: &[f64],
    labels: &[bool],
    threshold: f64,
) -> Result<ClassificationMetrics> {
    if p_true.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: p_true.len(),
        });
    }
    if p_true.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    let mut c = Confusion::default();
    for (&p, &y) in p_true.iter().zip(labels) {
        if p.is_nan() {
            return Err(Error::InvalidArgument("prediction is NaN".into()));
        }
        match (p >= threshold, y) {
            (true, true) => c.true_positive += 1,
            (true, false) => c.false_positive += 1,
            (false, false) => c.true_negative += 1,
            (false, true) => c.false_negative += 1,
        }
    }
    Ok(ClassificationMetrics::from_confusion(c))
}
