//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Every expected value is computed here from first principles: Shapley
//! values by direct subset enumeration with factorial weights, AUC by counting
//! pairs, the training objective by its textbook formula.

use std::path::Path;
use std::time::{Duration, Instant};

use claimlens::augment::{augment_dataset, AugmentOptions, AugmentScope, FixtureClient};
use claimlens::corpus::{load_dataset, Format};
use claimlens::eval::{cross_validate, render_report, roc_auc, PipelineSpec, ReportFormat};
use claimlens::explain::{
    build_background, exact_shapley, linear_shap, sampling_shapley, tree_shap, Attribution,
    Background,
};
use claimlens::models::{
    train_distilled, train_logistic, LogisticModel, LogisticObjective, Model, Node, Optimizer,
    TrainConfig, TreeConfig, TreeModel,
};
use claimlens::synth::{generate, SynthConfig};
use claimlens::textprep::FeatureVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Largest |base + Σφ − output| seen over every exact attribution.
#[derive(Default)]
struct Additivity {
    count: usize,
    worst: f64,
}

impl Additivity {
    fn record(&mut self, a: &Attribution) {
        self.count += 1;
        self.worst = self.worst.max(a.additivity_residual().abs());
    }
}

// ---------- oracles ----------

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Shapley values of `v(S) = mean_z f(x_S, z_rest)` over all features,
/// by enumerating every subset and weighting with |S|!(d−|S|−1)!/d!.
fn oracle_shapley(model: &Model, x: &[f64], background: &[Vec<f64>]) -> Vec<f64> {
    let d = x.len();
    let mut value = vec![0.0; 1 << d];
    for (mask, v) in value.iter_mut().enumerate() {
        let mut total = 0.0;
        for z in background {
            let hybrid: Vec<f64> = (0..d)
                .map(|i| if mask >> i & 1 == 1 { x[i] } else { z[i] })
                .collect();
            total += model.margin(&hybrid);
        }
        *v = total / background.len() as f64;
    }
    (0..d)
        .map(|i| {
            (0..1usize << d)
                .filter(|m| m >> i & 1 == 0)
                .map(|m| {
                    let s = m.count_ones() as usize;
                    factorial(s) * factorial(d - s - 1) / factorial(d)
                        * (value[m | 1 << i] - value[m])
                })
                .sum()
        })
        .collect()
}

fn oracle_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut doubled = 0u64;
    let mut pairs = 0u64;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1;
            doubled += if si > sj {
                2
            } else if si == sj {
                1
            } else {
                0
            };
        }
    }
    doubled as f64 / (2 * pairs) as f64
}

/// Blended objective written out directly from its definition.
#[allow(clippy::too_many_arguments)]
fn oracle_loss(
    rows: &[Vec<f64>],
    y: &[f64],
    t: &[f64],
    alpha: f64,
    tau: f64,
    lambda: f64,
    w: &[f64],
    b: f64,
) -> f64 {
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let ce = |p: f64, q: f64| -(p * q.ln() + (1.0 - p) * (1.0 - q).ln());
    let n = rows.len() as f64;
    let mut soft = 0.0;
    let mut hard = 0.0;
    for ((x, &yi), &ti) in rows.iter().zip(y).zip(t) {
        let z: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        let t_soft = sig((ti / (1.0 - ti)).ln() / tau);
        soft += ce(t_soft, sig(z / tau));
        hard += ce(yi, sig(z));
    }
    alpha * soft / n
        + (1.0 - alpha) * hard / n
        + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

// ---------- random instances ----------

fn sparse_value(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.4) {
        0.0
    } else {
        (rng.gen_range(0..8) as f64) / 8.0
    }
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| sparse_value(rng)).collect())
        .collect()
}

fn background_of(model: &Model, rows: &[Vec<f64>]) -> Background {
    build_background(
        model,
        rows.iter().map(|r| FeatureVector::from_dense(r)).collect(),
    )
    .unwrap()
}

fn random_tree(rng: &mut ChaCha8Rng, d: usize, max_depth: usize) -> TreeModel {
    fn grow(rng: &mut ChaCha8Rng, nodes: &mut Vec<Node>, d: usize, depth: usize) -> usize {
        let at = nodes.len();
        if depth == 0 || rng.gen_bool(0.15) {
            nodes.push(Node::Leaf {
                p_true: rng.gen_range(0.02..0.98),
                samples: 1.0,
            });
            return at;
        }
        nodes.push(Node::Leaf {
            p_true: 0.5,
            samples: 0.0,
        });
        let feature = rng.gen_range(0..d);
        let threshold = (rng.gen_range(0..8) as f64 + 0.5) / 8.0;
        let left = grow(rng, nodes, d, depth - 1);
        let right = grow(rng, nodes, d, depth - 1);
        nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, d, max_depth);
    TreeModel {
        nodes,
        n_features: d,
        config: TreeConfig::default(),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

// ---------- criteria ----------

fn shapley_oracle_equivalence(additivity: &mut Additivity) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_linear = 0.0f64;
    let mut worst_exact = 0.0f64;
    let instances = 120;
    for _ in 0..instances {
        let d = rng.gen_range(2..=12);
        let weights: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let model = Model::Logistic(LogisticModel::new(weights, rng.gen_range(-1.0..1.0)));
        let n_bg = rng.gen_range(1..=16);
        let bg_rows = random_rows(&mut rng, n_bg, d);
        let bg = background_of(&model, &bg_rows);
        let x: Vec<f64> = (0..d).map(|_| sparse_value(&mut rng)).collect();
        let lin = linear_shap(&model, &x, &bg).unwrap();
        let ex = exact_shapley(&model, &x, &bg).unwrap();
        let truth = oracle_shapley(&model, &x, &bg_rows);
        worst_linear = worst_linear.max(max_abs_diff(&lin.phi, &ex.phi));
        worst_exact = worst_exact.max(max_abs_diff(&ex.phi, &truth));
        additivity.record(&lin);
        additivity.record(&ex);
    }
    let mut worst_tree = 0.0f64;
    for _ in 0..instances {
        let d = rng.gen_range(2..=10);
        let depth = rng.gen_range(1..=4);
        let model = Model::Tree(random_tree(&mut rng, d, depth));
        let bg_rows = random_rows(&mut rng, 8, d);
        let bg = background_of(&model, &bg_rows);
        let x: Vec<f64> = (0..d).map(|_| sparse_value(&mut rng)).collect();
        let ts = tree_shap(&model, &x, &bg).unwrap();
        let ex = exact_shapley(&model, &x, &bg).unwrap();
        let truth = oracle_shapley(&model, &x, &bg_rows);
        worst_tree = worst_tree.max(max_abs_diff(&ts.phi, &ex.phi));
        worst_exact = worst_exact.max(max_abs_diff(&ex.phi, &truth));
        additivity.record(&ts);
        additivity.record(&ex);
    }
    let elapsed = start.elapsed();
    check(
        worst_linear <= 1e-9 && worst_tree <= 1e-9 && worst_exact <= 1e-9 && elapsed < Duration::from_secs(60),
        format!(
            "{instances} logistic + {instances} tree instances; max |linear-exact| {worst_linear:.1e}, \
             max |tree-exact| {worst_tree:.1e}, max |exact-oracle| {worst_exact:.1e}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn sampling_convergence(additivity: &mut Additivity) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    let mut reproducible = true;
    let mut tree_error = 0.0f64;
    for case in 0..4 {
        let d = 8;
        let (model, bg, x, exact) = loop {
            let model = if case < 3 {
                let weights: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                Model::Logistic(LogisticModel::new(weights, 0.3))
            } else {
                // a non-additive model, where sampling error is not zero by construction
                Model::Tree(random_tree(&mut rng, d, 4))
            };
            let bg_rows = random_rows(&mut rng, 8, d);
            let bg = background_of(&model, &bg_rows);
            let x: Vec<f64> = (0..d).map(|_| sparse_value(&mut rng)).collect();
            let exact = exact_shapley(&model, &x, &bg).unwrap();
            if exact.phi.iter().filter(|p| p.abs() > 1e-6).count() >= 3 {
                break (model, bg, x, exact);
            }
        };
        additivity.record(&exact);
        let a = sampling_shapley(&model, &x, &bg, 10_000, 7).unwrap();
        let b = sampling_shapley(&model, &x, &bg, 10_000, 7).unwrap();
        reproducible &= a
            .phi
            .iter()
            .zip(&b.phi)
            .all(|(p, q)| p.to_bits() == q.to_bits());
        let error = max_abs_diff(&a.phi, &exact.phi);
        if case == 3 {
            tree_error = error;
        }
        worst = worst.max(error);
    }
    let elapsed = start.elapsed();
    check(
        worst <= 0.02 && reproducible && elapsed < Duration::from_secs(30),
        format!(
            "3 logistic + 1 tree instance (8 features), 10000 permutations; max |sampling-exact| {worst:.2e} (tree {tree_error:.2e}); \
             bitwise reproducible: {reproducible}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn local_accuracy(additivity: &Additivity) -> Outcome {
    check(
        additivity.count > 0 && additivity.worst <= 1e-9,
        format!(
            "{} exact attributions; max |base + sum(phi) - output| {:.1e}",
            additivity.count, additivity.worst
        ),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let step = 1e-5;
    let mut worst_grad = 0.0f64;
    let mut worst_loss = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(5..40);
        let d = rng.gen_range(1..12);
        let dense = random_rows(&mut rng, n, d);
        let rows: Vec<FeatureVector> = dense.iter().map(|r| FeatureVector::from_dense(r)).collect();
        let hard: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 })
            .collect();
        let soft: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.99)).collect();
        let alpha = rng.gen_range(0.0..=1.0);
        let tau = rng.gen_range(0.5..3.0);
        let lambda = rng.gen_range(0.0..0.1);
        let objective = LogisticObjective {
            rows: &rows,
            hard: &hard,
            soft: &soft,
            distill_weight: alpha,
            temperature: tau,
            l2_penalty: lambda,
        };
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let b = rng.gen_range(-1.0..1.0);
        let f = |w: &[f64], b: f64| oracle_loss(&dense, &hard, &soft, alpha, tau, lambda, w, b);

        let eval = objective.evaluate(&w, b);
        let reference = f(&w, b);
        worst_loss = worst_loss.max((eval.loss - reference).abs() / reference.abs().max(1.0));

        let mut analytic = eval.grad_weights.clone();
        analytic.push(eval.grad_bias);
        let mut numeric = Vec::with_capacity(d + 1);
        for i in 0..=d {
            let (mut up, mut down) = (w.clone(), w.clone());
            let (mut bu, mut bd) = (b, b);
            if i < d {
                up[i] += step;
                down[i] -= step;
            } else {
                bu += step;
                bd -= step;
            }
            numeric.push((f(&up, bu) - f(&down, bd)) / (2.0 * step));
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&analytic).max(norm(&numeric)).max(f64::MIN_POSITIVE);
        worst_grad = worst_grad.max(rel);
    }
    check(
        worst_grad <= 1e-4 && worst_loss <= 1e-12,
        format!(
            "50 random problems (alpha in [0,1], tau in [0.5,3]); max relative gradient error {worst_grad:.2e} \
             (||g - fd|| / max(||g||, ||fd||)); max loss deviation from formula {worst_loss:.1e}"
        ),
    )
}

fn distillation_degeneracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_curve = 0.0f64;
    for optimizer in [Optimizer::Gd, Optimizer::Adam] {
        let dense = random_rows(&mut rng, 60, 6);
        let rows: Vec<FeatureVector> = dense.iter().map(|r| FeatureVector::from_dense(r)).collect();
        let labels: Vec<bool> = (0..60).map(|i| i % 3 != 0).collect();
        let one_hot: Vec<f64> = labels.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
        let cfg = TrainConfig {
            epochs: 200,
            optimizer,
            learning_rate: if optimizer == Optimizer::Adam {
                0.05
            } else {
                0.5
            },
            distill_weight: 1.0,
            temperature: 1.0,
            ..TrainConfig::default()
        };
        let hard = train_logistic(&rows, &labels, &cfg).unwrap();
        let distilled = train_distilled(&rows, &labels, &one_hot, &cfg).unwrap();
        let a = &hard.training_meta.loss_curve;
        let b = &distilled.training_meta.loss_curve;
        if a.len() != b.len() {
            return check(false, "loss curves differ in length");
        }
        worst_curve = worst_curve.max(max_abs_diff(a, b));
    }

    // planted teacher: a known logistic model labels synthetic claims
    let d = 10;
    let beta: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.5..2.5)).collect();
    let bias = 0.2;
    let teacher = |x: &[f64]| {
        1.0 / (1.0 + (-(x.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + bias)).exp())
    };
    let draw = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    };
    let train_x = draw(&mut rng, 600);
    let test_x = draw(&mut rng, 400);
    let train_t: Vec<f64> = train_x.iter().map(|x| teacher(x)).collect();
    let train_y: Vec<bool> = train_t.iter().map(|&p| rng.gen_bool(p)).collect();
    let rows: Vec<FeatureVector> = train_x
        .iter()
        .map(|r| FeatureVector::from_dense(r))
        .collect();
    let student = train_distilled(&rows, &train_y, &train_t, &TrainConfig::default()).unwrap();
    let agree = test_x
        .iter()
        .filter(|x| (student.proba(&x.to_vec()) >= 0.5) == (teacher(x) >= 0.5))
        .count();
    let agreement = agree as f64 / test_x.len() as f64;
    check(
        worst_curve <= 1e-12 && agreement >= 0.95,
        format!(
            "one-hot teacher, alpha=1: max per-iteration loss gap {worst_curve:.1e} (GD and Adam); \
             planted teacher held-out agreement {agreement:.3} ({agree}/400)"
        ),
    )
}

fn auc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut mismatches = 0;
    let mut with_ties = 0;
    for case in 0..1000 {
        let n = rng.gen_range(2..120);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let levels = if case % 2 == 0 { 5 } else { 1000 };
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0..levels) as f64 / levels as f64)
            .collect();
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            with_ties += 1;
        }
        if roc_auc(&scores, &labels).unwrap() != oracle_auc(&scores, &labels) {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0 && with_ties > 0,
        format!("1000 random instances ({with_ties} with tied scores); {mismatches} differ from the pairwise count"),
    )
}

fn bundled_corpus() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_claims.jsonl")
}

fn end_to_end_cv() -> Outcome {
    let start = Instant::now();
    let data = load_dataset(&bundled_corpus(), Format::Jsonl).unwrap();
    let (generated, _) = generate(&SynthConfig::default()).unwrap();
    if data.records() != generated.records() {
        return check(false, "bundled corpus does not match its generator");
    }
    let report = cross_validate(&PipelineSpec::default(), &data, None, 10, 0).unwrap();
    let elapsed = start.elapsed();
    let table = render_report(std::slice::from_ref(&report), ReportFormat::Markdown).unwrap();
    let header_ok = table
        .lines()
        .next()
        .is_some_and(|h| h == "| Model | Precision (False/True) | Recall (False/True) | F1-score (False/True) | Accuracy | AUC |");
    let rows_ok = table.lines().count() == 3;
    check(
        report.accuracy >= 0.90 && elapsed < Duration::from_secs(60) && header_ok && rows_ok && report.folds.len() == 10,
        format!(
            "200 planted claims, 10-fold stratified CV, TF-IDF logistic: mean accuracy {:.3}, AUC {:.3}; \
             report layout: {}; {:.1}s",
            report.accuracy,
            report.auc.unwrap_or(f64::NAN),
            header_ok && rows_ok,
            elapsed.as_secs_f64()
        ),
    )
}

fn augmentation_bookkeeping() -> Outcome {
    let data = load_dataset(&bundled_corpus(), Format::Jsonl).unwrap();
    let client = FixtureClient::from_pairs(data.records().iter().map(|r| {
        let mut words: Vec<&str> = r.text.trim_end_matches('.').split(' ').collect();
        words.reverse();
        (r.text.clone(), format!("{}.", words.join(" ")))
    }));
    let (aug, report) = augment_dataset(
        &client,
        &data,
        "de",
        AugmentScope::TrainFoldsOnly,
        AugmentOptions { max_concurrency: 4 },
    )
    .unwrap();
    let n = data.len();
    let products: Vec<_> = aug.records().iter().filter(|r| r.is_augmented()).collect();
    let links_ok = products.iter().all(|p| {
        let parent = data.get(p.parent_id.as_deref().unwrap());
        parent.is_some_and(|parent| parent.label == p.label)
    });
    let originals_kept = aug.records()[..n] == *data.records();
    let (fake, truth) = aug.class_counts();
    check(
        aug.len() == 2 * n && products.len() == n && links_ok && originals_kept && report.produced == n,
        format!(
            "{n} claims -> {} ({fake} fake, {truth} true); every product links to a same-label parent: {links_ok}",
            aug.len()
        ),
    )
}

fn aaai_dataset() -> Option<Outcome> {
    let path = std::env::var_os("CLAIMLENS_AAAI_DATA")?;
    let start = Instant::now();
    let path = Path::new(&path);
    let data = match load_dataset(path, Format::from_path(path)) {
        Ok(d) => d,
        Err(e) => return Some(check(false, format!("cannot load {}: {e}", path.display()))),
    };
    let report = match cross_validate(&PipelineSpec::default(), &data, None, 10, 0) {
        Ok(r) => r,
        Err(e) => return Some(check(false, format!("cross-validation failed: {e}"))),
    };
    let auc = report.auc.unwrap_or(f64::NAN);
    Some(check(
        (report.accuracy - 0.934).abs() <= 0.02 && (auc - 0.984).abs() <= 0.01,
        format!(
            "{} claims: accuracy {:.3} (target 0.934 +/- 0.02), AUC {:.3} (target 0.984 +/- 0.01); {:.0}s",
            data.len(),
            report.accuracy,
            auc,
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn main() {
    let mut additivity = Additivity::default();
    let mut results: Vec<(&str, Option<Outcome>)> = vec![
        (
            "shapley-oracle-equivalence",
            Some(shapley_oracle_equivalence(&mut additivity)),
        ),
        (
            "sampling-convergence",
            Some(sampling_convergence(&mut additivity)),
        ),
    ];
    results.push(("local-accuracy", Some(local_accuracy(&additivity))));
    results.push(("gradient-check", Some(gradient_check())));
    results.push(("distillation-degeneracy", Some(distillation_degeneracy())));
    results.push(("auc-oracle", Some(auc_oracle())));
    results.push(("end-to-end-cv", Some(end_to_end_cv())));
    results.push(("augmentation-bookkeeping", Some(augmentation_bookkeeping())));
    results.push(("aaai-dataset (optional)", aaai_dataset()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Some(o) if o.passed => println!("PASS {name}: {}", o.detail),
            Some(o) => {
                failed += 1;
                println!("FAIL {name}: {}", o.detail);
            }
            None => {
                println!("SKIP {name}: set CLAIMLENS_AAAI_DATA to a labeled claims file to run")
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
