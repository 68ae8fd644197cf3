//! Interventional TreeSHAP.
//!
//! For an instance `x` and one background row `z`, the game
//! `v(S) = f(x_S, z_rest)` on a single tree is a sum of leaf indicator games.
//! Walking the tree jointly for `x` and `z`, every split where the two rows
//! disagree forces the split feature into the coalition (following `x`) or
//! out of it (following `z`). A leaf reached with `a` features following `x`
//! and `b` following `z` is reached exactly by the coalitions containing the
//! first set and avoiding the second, which gives closed-form credits:
//!
//! * `+v · (a−1)! b! / (a+b)!` to each of the `a` features,
//! * `−v · a! (b−1)! / (a+b)!` to each of the `b` features.
//!
//! Averaging over background rows and trees gives the attribution of the
//! model's mean log-odds.

use super::{instance_dense, Attribution, Background, Method};
use crate::error::{Error, Result};
use crate::math::logit;
use crate::models::{Features, Model, Node, TreeModel};
use crate::textprep::FeatureVector;

pub fn tree_shap<F: Features + ?Sized>(
    model: &Model,
    x: &F,
    background: &Background,
) -> Result<Attribution> {
    let trees: &[TreeModel] = match model {
        Model::Tree(t) => std::slice::from_ref(t),
        Model::Forest(f) => &f.trees,
        Model::Logistic(_) => return Err(Error::UnsupportedModel(model.kind())),
    };
    let x = instance_dense(model, x, background)?;
    let mut phi = vec![0.0; x.len()];
    let mut tree_phi = vec![0.0; x.len()];
    let mut base = 0.0;
    let mut walk = Walk::default();
    for tree in trees {
        tree_phi.iter_mut().for_each(|v| *v = 0.0);
        let mut tree_base = 0.0;
        for row in background.rows() {
            tree_base += tree.margin(row);
            walk.run(tree, &x, row, &mut tree_phi);
        }
        let n = background.len() as f64;
        for (total, v) in phi.iter_mut().zip(&tree_phi) {
            *total += v / n;
        }
        base += tree_base / n;
    }
    let n_trees = trees.len() as f64;
    phi.iter_mut().for_each(|v| *v /= n_trees);

    Ok(Attribution {
        phi,
        base_logodds: base / n_trees,
        base_probability: background.base_probability,
        output_logodds: model.margin(&x),
        method: Method::TreeInterventional,
        samples: None,
        seed: None,
    })
}

#[derive(Default)]
struct Walk {
    follow_x: Vec<usize>,
    follow_z: Vec<usize>,
}

impl Walk {
    fn run(&mut self, tree: &TreeModel, x: &[f64], z: &FeatureVector, phi: &mut [f64]) {
        self.follow_x.clear();
        self.follow_z.clear();
        self.visit(tree, 0, x, z, phi);
    }

    fn visit(
        &mut self,
        tree: &TreeModel,
        at: usize,
        x: &[f64],
        z: &FeatureVector,
        phi: &mut [f64],
    ) {
        match tree.nodes[at] {
            Node::Leaf { p_true, .. } => self.credit(logit(p_true), phi),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let x_next = if x[feature] <= threshold { left } else { right };
                let z_next = if z.get(feature) <= threshold {
                    left
                } else {
                    right
                };
                if x_next == z_next || self.follow_x.contains(&feature) {
                    self.visit(tree, x_next, x, z, phi);
                } else if self.follow_z.contains(&feature) {
                    self.visit(tree, z_next, x, z, phi);
                } else {
                    self.follow_x.push(feature);
                    self.visit(tree, x_next, x, z, phi);
                    self.follow_x.pop();
                    self.follow_z.push(feature);
                    self.visit(tree, z_next, x, z, phi);
                    self.follow_z.pop();
                }
            }
        }
    }

    fn credit(&self, value: f64, phi: &mut [f64]) {
        let a = self.follow_x.len();
        let b = self.follow_z.len();
        if a > 0 {
            let share = value / ((a + b) as f64 * binomial(a + b - 1, b));
            for &i in &self.follow_x {
                phi[i] += share;
            }
        }
        if b > 0 {
            let share = value / ((a + b) as f64 * binomial(a + b - 1, a));
            for &j in &self.follow_z {
                phi[j] -= share;
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::{build_background, exact_shapley};
    use crate::models::{ForestConfig, ForestModel, TreeConfig};
    use approx::assert_abs_diff_eq;

    fn stump(feature: usize, threshold: f64, lo: f64, hi: f64, dim: usize) -> TreeModel {
        TreeModel {
            nodes: vec![
                Node::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf {
                    p_true: lo,
                    samples: 1.0,
                },
                Node::Leaf {
                    p_true: hi,
                    samples: 1.0,
                },
            ],
            n_features: dim,
            config: TreeConfig::default(),
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(0, 0), 1.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(6, 6), 1.0);
    }

    #[test]
    fn constant_tree() {
        let model = Model::Tree(TreeModel::leaf(0.8, 3));
        let bg =
            build_background(&model, vec![FeatureVector::from_dense(&[1.0, 2.0, 3.0])]).unwrap();
        let a = tree_shap(&model, &vec![0.0, 5.0, -1.0], &bg).unwrap();
        assert!(a.phi.iter().all(|&v| v == 0.0));
        assert_abs_diff_eq!(a.base_logodds, (0.8f64 / 0.2).ln(), epsilon = 1e-12);
    }

    #[test]
    fn stump_matches_exact() {
        let model = Model::Tree(stump(1, 0.5, 0.2, 0.7, 3));
        let rows = vec![
            FeatureVector::from_dense(&[0.0, 0.0, 1.0]),
            FeatureVector::from_dense(&[1.0, 1.0, 0.0]),
            FeatureVector::from_dense(&[0.3, 0.2, 0.0]),
        ];
        let bg = build_background(&model, rows).unwrap();
        let x = vec![0.9, 0.8, 0.4];
        let t = tree_shap(&model, &x, &bg).unwrap();
        let e = exact_shapley(&model, &x, &bg).unwrap();
        for (a, b) in t.phi.iter().zip(&e.phi) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_eq!(t.phi[0], 0.0);
        assert_eq!(t.phi[2], 0.0);
    }

    #[test]
    fn forest_is_mean_of_trees() {
        let trees = vec![stump(0, 0.5, 0.1, 0.6, 2), stump(1, 0.5, 0.3, 0.95, 2)];
        let forest = ForestModel::from_trees(trees.clone(), ForestConfig::default()).unwrap();
        let model = Model::Forest(forest);
        let rows = vec![
            FeatureVector::from_dense(&[0.0, 1.0]),
            FeatureVector::from_dense(&[1.0, 0.0]),
        ];
        let bg = build_background(&model, rows.clone()).unwrap();
        let x = vec![1.0, 1.0];
        let whole = tree_shap(&model, &x, &bg).unwrap();
        let parts: Vec<Attribution> = trees
            .into_iter()
            .map(|t| {
                let m = Model::Tree(t);
                let bg = build_background(&m, rows.clone()).unwrap();
                tree_shap(&m, &x, &bg).unwrap()
            })
            .collect();
        for i in 0..2 {
            assert_abs_diff_eq!(
                whole.phi[i],
                (parts[0].phi[i] + parts[1].phi[i]) / 2.0,
                epsilon = 1e-12
            );
        }
        assert!(whole.additivity_residual().abs() <= 1e-9);
    }
}
