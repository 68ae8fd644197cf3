use serde::{Deserialize, Serialize};

use super::{check_both_classes, check_rows, Features};
use crate::error::{Error, Result};
use crate::math::{clamp_prob, logit, sigmoid};
use crate::textprep::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Gd,
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gd" => Ok(Optimizer::Gd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(Error::InvalidArgument(format!(
                "unknown optimizer \"{other}\""
            ))),
        }
    }
}

/// Full-batch training settings for the logistic student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_penalty: f64,
    pub optimizer: Optimizer,
    /// Weight of the distillation term; 1 is pure distillation, 0 pure hard labels.
    pub distill_weight: f64,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 500,
            l2_penalty: 1e-4,
            optimizer: Optimizer::Gd,
            distill_weight: 1.0,
            temperature: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return bad("l2_penalty must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.distill_weight) {
            return bad("distill_weight must lie in [0, 1]");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    /// Objective before each update, plus the final value.
    pub loss_curve: Vec<f64>,
    pub config: TrainConfig,
    pub n_examples: usize,
    pub distilled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(default)]
    pub training_meta: TrainingMeta,
}

impl LogisticModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        LogisticModel {
            weights,
            bias,
            training_meta: TrainingMeta::default(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        LogisticModel::new(vec![0.0; dim], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn margin<F: Features + ?Sized>(&self, x: &F) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn proba<F: Features + ?Sized>(&self, x: &F) -> f64 {
        sigmoid(self.margin(x))
    }
}

/// Temperature-softened probability: the logit is divided by `temperature`.
/// Temperature 1 and the hard values 0 and 1 are left unchanged.
pub fn soften(p: f64, temperature: f64) -> f64 {
    if temperature == 1.0 || p == 0.0 || p == 1.0 {
        p
    } else {
        sigmoid(logit(p) / temperature)
    }
}

fn cross_entropy(target: f64, p: f64) -> f64 {
    let p = clamp_prob(p);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// Two-class cross-entropy of the student against the teacher, after
/// temperature softening of both: `-[t ln s + (1 - t) ln(1 - s)]`.
pub fn distill_loss(teacher: f64, student: f64, temperature: f64) -> f64 {
    cross_entropy(soften(teacher, temperature), soften(student, temperature))
}

/// Blended training objective
/// `α·mean(distill) + (1 − α)·mean(hard cross-entropy) + (λ/2)·‖β‖²`.
///
/// Exposed so the analytic gradient can be checked independently.
#[derive(Debug, Clone, Copy)]
pub struct LogisticObjective<'a> {
    pub rows: &'a [FeatureVector],
    pub hard: &'a [f64],
    pub soft: &'a [f64],
    pub distill_weight: f64,
    pub temperature: f64,
    pub l2_penalty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub grad_weights: Vec<f64>,
    pub grad_bias: f64,
}

impl LogisticObjective<'_> {
    pub fn loss(&self, weights: &[f64], bias: f64) -> f64 {
        self.evaluate(weights, bias).loss
    }

    pub fn evaluate(&self, weights: &[f64], bias: f64) -> Evaluation {
        let n = self.rows.len() as f64;
        let alpha = self.distill_weight;
        let tau = self.temperature;
        let mut soft_sum = 0.0;
        let mut hard_sum = 0.0;
        let mut grad_weights = vec![0.0; weights.len()];
        let mut grad_bias = 0.0;
        for ((row, &y), &t) in self.rows.iter().zip(self.hard).zip(self.soft) {
            let z = row.dot(weights) + bias;
            let s = sigmoid(z);
            let s_soft = if tau == 1.0 { s } else { sigmoid(z / tau) };
            let t_soft = soften(t, tau);
            soft_sum += cross_entropy(t_soft, s_soft);
            hard_sum += cross_entropy(y, s);
            let dz = alpha * (s_soft - t_soft) / tau + (1.0 - alpha) * (s - y);
            for (i, v) in row.iter() {
                grad_weights[i] += dz * v;
            }
            grad_bias += dz;
        }
        let penalty: f64 = weights.iter().map(|w| w * w).sum();
        let loss = alpha * (soft_sum / n)
            + (1.0 - alpha) * (hard_sum / n)
            + 0.5 * self.l2_penalty * penalty;
        for (g, w) in grad_weights.iter_mut().zip(weights) {
            *g = *g / n + self.l2_penalty * w;
        }
        Evaluation {
            loss,
            grad_weights,
            grad_bias: grad_bias / n,
        }
    }
}

/// Plain logistic regression on hard labels.
pub fn train_logistic(
    rows: &[FeatureVector],
    labels: &[bool],
    config: &TrainConfig,
) -> Result<LogisticModel> {
    let hard = targets(labels);
    let cfg = TrainConfig {
        distill_weight: 0.0,
        ..config.clone()
    };
    fit(rows, labels, &hard, &hard, &cfg, false)
}

/// Logistic student fitted to a blend of teacher probabilities and hard labels.
pub fn train_distilled(
    rows: &[FeatureVector],
    labels: &[bool],
    teacher: &[f64],
    config: &TrainConfig,
) -> Result<LogisticModel> {
    if teacher.len() != rows.len() {
        return Err(Error::MissingTargets {
            count: rows.len().saturating_sub(teacher.len()),
            sample: Vec::new(),
        });
    }
    if let Some((i, &p)) = teacher
        .iter()
        .enumerate()
        .find(|(_, p)| !(0.0..=1.0).contains(*p))
    {
        return Err(Error::ProbabilityOutOfRange {
            id: format!("row {i}"),
            value: p,
        });
    }
    fit(rows, labels, &targets(labels), teacher, config, true)
}

fn targets(labels: &[bool]) -> Vec<f64> {
    labels.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect()
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn fit(
    rows: &[FeatureVector],
    labels: &[bool],
    hard: &[f64],
    soft: &[f64],
    config: &TrainConfig,
    distilled: bool,
) -> Result<LogisticModel> {
    config.validate()?;
    let dim = check_rows(rows, labels.len())?;
    check_both_classes(labels)?;
    for row in rows {
        if row.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "feature values must be finite".into(),
            ));
        }
    }

    let objective = LogisticObjective {
        rows,
        hard,
        soft,
        distill_weight: config.distill_weight,
        temperature: config.temperature,
        l2_penalty: config.l2_penalty,
    };
    let lr = config.learning_rate;
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut curve = Vec::with_capacity(config.epochs + 1);
    let mut m = vec![0.0; dim + 1];
    let mut v = vec![0.0; dim + 1];

    for iteration in 0..=config.epochs {
        let eval = objective.evaluate(&weights, bias);
        if !eval.loss.is_finite() {
            return Err(Error::Diverged { iteration });
        }
        curve.push(eval.loss);
        if iteration == config.epochs {
            break;
        }
        match config.optimizer {
            Optimizer::Gd => {
                for (w, g) in weights.iter_mut().zip(&eval.grad_weights) {
                    *w -= lr * g;
                }
                bias -= lr * eval.grad_bias;
            }
            Optimizer::Adam => {
                let step = (iteration + 1) as i32;
                let correct1 = 1.0 - ADAM_BETA1.powi(step);
                let correct2 = 1.0 - ADAM_BETA2.powi(step);
                let grads = eval
                    .grad_weights
                    .iter()
                    .chain(std::iter::once(&eval.grad_bias));
                let params = weights.iter_mut().chain(std::iter::once(&mut bias));
                for (((p, g), m), v) in params.zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    *p -= lr * (*m / correct1) / ((*v / correct2).sqrt() + ADAM_EPS);
                }
            }
        }
    }

    Ok(LogisticModel {
        weights,
        bias,
        training_meta: TrainingMeta {
            loss_curve: curve,
            config: config.clone(),
            n_examples: rows.len(),
            distilled,
        },
    })
}
