use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_both_classes, check_rows, Features};
use crate::error::{Error, Result};
use crate::math::logit;
use crate::textprep::FeatureVector;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    /// Minimum number of training samples in each leaf.
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 12,
            min_leaf: 1,
        }
    }
}

/// Samples with `value <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        p_true: f64,
        samples: f64,
    },
}

/// Binary classification tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub config: TreeConfig,
}

impl TreeModel {
    pub fn leaf(p_true: f64, n_features: usize) -> Self {
        TreeModel {
            nodes: vec![Node::Leaf {
                p_true,
                samples: 0.0,
            }],
            n_features,
            config: TreeConfig::default(),
        }
    }

    pub fn leaf_index<F: Features + ?Sized>(&self, x: &F) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.value(feature) <= threshold {
                        left
                    } else {
                        right
                    }
                }
                Node::Leaf { .. } => return at,
            }
        }
    }

    pub fn proba<F: Features + ?Sized>(&self, x: &F) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { p_true, .. } => p_true,
            Node::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    pub fn margin<F: Features + ?Sized>(&self, x: &F) -> f64 {
        logit(self.proba(x))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    /// Checks that nodes form a tree rooted at 0 with valid leaves.
    pub fn validate(&self) -> Result<()> {
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            if at >= self.nodes.len() || visited[at] {
                return Err(Error::InvalidArgument(format!(
                    "node {at} is out of range or revisited"
                )));
            }
            visited[at] = true;
            match self.nodes[at] {
                Node::Split {
                    feature,
                    left,
                    right,
                    ..
                } => {
                    if feature >= self.n_features {
                        return Err(Error::DimensionMismatch {
                            expected: self.n_features,
                            found: feature + 1,
                        });
                    }
                    stack.push(left);
                    stack.push(right);
                }
                Node::Leaf { p_true, .. } => {
                    if !(0.0..=1.0).contains(&p_true) {
                        return Err(Error::InvalidArgument(format!(
                            "leaf probability {p_true} outside [0,1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// CART with Gini impurity.
pub fn train_tree(
    rows: &[FeatureVector],
    labels: &[bool],
    config: &TreeConfig,
) -> Result<TreeModel> {
    let weights = vec![1.0; rows.len()];
    grow(
        rows,
        labels,
        &weights,
        config,
        None::<(&mut rand_chacha::ChaCha8Rng, f64)>,
    )
}

/// Grows one tree on weighted samples. When `subsample` is given, each split
/// considers a random `fraction` of the features that vary within the node.
pub(crate) fn grow<R: Rng>(
    rows: &[FeatureVector],
    labels: &[bool],
    weights: &[f64],
    config: &TreeConfig,
    subsample: Option<(&mut R, f64)>,
) -> Result<TreeModel> {
    let n_features = check_rows(rows, labels.len())?;
    check_both_classes(labels)?;
    let samples: Vec<usize> = (0..rows.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut builder = Builder {
        rows,
        labels,
        weights,
        config,
        subsample,
        nodes: Vec::new(),
    };
    builder.build(&samples, 0);
    Ok(TreeModel {
        nodes: builder.nodes,
        n_features,
        config: config.clone(),
    })
}

struct Builder<'a, R> {
    rows: &'a [FeatureVector],
    labels: &'a [bool],
    weights: &'a [f64],
    config: &'a TreeConfig,
    subsample: Option<(&'a mut R, f64)>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

// Gains within this distance are ties; the earlier candidate wins.
const TIE_EPS: f64 = 1e-12;

fn gini(total: f64, positive: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = positive / total;
    2.0 * p * (1.0 - p)
}

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, samples: &[usize], depth: usize) -> usize {
        let (total, positive) = samples.iter().fold((0.0, 0.0), |(t, p), &i| {
            let w = self.weights[i];
            (t + w, if self.labels[i] { p + w } else { p })
        });
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            p_true: if total > 0.0 { positive / total } else { 0.5 },
            samples: total,
        });
        let pure = positive == 0.0 || positive == total;
        if pure || depth >= self.config.max_depth {
            return id;
        }
        let Some(split) = self.best_split(samples, total, positive) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.rows[i].get(split.feature) <= split.threshold);
        let left_id = self.build(&left, depth + 1);
        let right_id = self.build(&right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_id,
            right: right_id,
        };
        id
    }

    fn best_split(&mut self, samples: &[usize], total: f64, positive: f64) -> Option<Split> {
        // (feature, value, weight, positive weight) for every non-zero entry in the node
        let mut entries: Vec<(usize, f64, f64, f64)> = Vec::new();
        for &i in samples {
            let w = self.weights[i];
            let wp = if self.labels[i] { w } else { 0.0 };
            entries.extend(self.rows[i].iter().map(|(f, v)| (f, v, w, wp)));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let mut groups: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
        let mut start = 0;
        while start < entries.len() {
            let feature = entries[start].0;
            let mut end = start;
            while end < entries.len() && entries[end].0 == feature {
                end += 1;
            }
            groups.push((feature, start..end));
            start = end;
        }

        if let Some((rng, fraction)) = self.subsample.as_mut() {
            if *fraction < 1.0 && !groups.is_empty() {
                let keep = ((groups.len() as f64) * *fraction).ceil().max(1.0) as usize;
                let mut chosen =
                    sample(&mut **rng, groups.len(), keep.min(groups.len())).into_vec();
                chosen.sort_unstable();
                groups = chosen.into_iter().map(|k| groups[k].clone()).collect();
            }
        }

        let parent = gini(total, positive);
        let min_leaf = self.config.min_leaf.max(1) as f64;
        let mut best: Option<Split> = None;
        let mut levels: Vec<(f64, f64, f64)> = Vec::new();
        for (feature, range) in groups {
            let nonzero = &entries[range];
            let (nz_w, nz_p) = nonzero
                .iter()
                .fold((0.0, 0.0), |(a, b), e| (a + e.2, b + e.3));
            // distinct values with their (weight, positive weight), zeros folded in
            levels.clear();
            let zero_w = total - nz_w;
            let mut zero_pending = zero_w > 1e-9;
            for &(_, v, w, wp) in nonzero {
                if zero_pending && v > 0.0 {
                    levels.push((0.0, zero_w, positive - nz_p));
                    zero_pending = false;
                }
                match levels.last_mut() {
                    Some(last) if last.0 == v => {
                        last.1 += w;
                        last.2 += wp;
                    }
                    _ => levels.push((v, w, wp)),
                }
            }
            if zero_pending {
                levels.push((0.0, zero_w, positive - nz_p));
            }

            let mut left_w = 0.0;
            let mut left_p = 0.0;
            for k in 0..levels.len().saturating_sub(1) {
                left_w += levels[k].1;
                left_p += levels[k].2;
                let right_w = total - left_w;
                if left_w < min_leaf - 1e-9 || right_w < min_leaf - 1e-9 {
                    continue;
                }
                let child = (left_w / total) * gini(left_w, left_p)
                    + (right_w / total) * gini(right_w, positive - left_p);
                let gain = parent - child;
                let better = match best {
                    None => gain > -TIE_EPS,
                    Some(b) => gain > b.gain + TIE_EPS,
                };
                if better {
                    best = Some(Split {
                        feature,
                        threshold: 0.5 * (levels[k].0 + levels[k + 1].0),
                        gain,
                    });
                }
            }
        }
        best
    }
}
