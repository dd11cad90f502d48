//! Multiclass gradient-boosted trees with a softmax cross-entropy objective:
//! one regression tree per class per round, exact greedy splits, second-order
//! leaf weights w = -G/(H + lambda), minimum split gain gamma and minimum
//! child hessian weight. Node covers record training instance counts for the
//! attribution pass.

use crate::catalog::FeatureId;
use crate::error::{Error, Result};

/// The paper's surrogate hyper-parameters are the defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub max_depth: usize,
    pub rounds: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            max_depth: 2,
            rounds: 200,
            learning_rate: 0.25,
            min_child_weight: 3.0,
            gamma: 0.5,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Split feature column, None for leaves.
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Leaf value, already scaled by the learning rate.
    pub value: f64,
    /// Training instances routed through this node.
    pub cover: f64,
}

impl Node {
    fn leaf(value: f64, cover: f64) -> Node {
        Node {
            feature: None,
            threshold: 0.0,
            left: usize::MAX,
            right: usize::MAX,
            value,
            cover,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.feature.is_none()
    }
}

/// One regression tree; nodes[0] is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut idx = 0usize;
        loop {
            let node = &self.nodes[idx];
            match node.feature {
                None => return node.value,
                Some(f) => {
                    idx = if row[f] < node.threshold {
                        node.left
                    } else {
                        node.right
                    };
                }
            }
        }
    }

    /// Cover-weighted expected leaf value: the tree's mean output over the
    /// training background.
    pub fn expected_value(&self) -> f64 {
        self.expected_at(0)
    }

    fn expected_at(&self, idx: usize) -> f64 {
        let node = &self.nodes[idx];
        match node.feature {
            None => node.value,
            Some(_) => {
                let l = &self.nodes[node.left];
                let r = &self.nodes[node.right];
                (l.cover * self.expected_at(node.left) + r.cover * self.expected_at(node.right))
                    / node.cover
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.depth_at(0)
    }

    fn depth_at(&self, idx: usize) -> usize {
        let node = &self.nodes[idx];
        match node.feature {
            None => 0,
            Some(_) => 1 + self.depth_at(node.left).max(self.depth_at(node.right)),
        }
    }
}

/// The trained multiclass ensemble. Raw margin for class c is the sum of
/// that class's trees over all rounds (initial margins are zero).
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub classes: usize,
    /// trees[round][class]
    pub trees: Vec<Vec<Tree>>,
    pub hyperparams: Hyperparams,
    pub feature_ids: Vec<FeatureId>,
    /// Multiclass log-loss on the training split after each round.
    pub train_loss_trace: Vec<f64>,
}

impl SurrogateModel {
    pub fn margins(&self, row: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.classes];
        for round in &self.trees {
            for (c, tree) in round.iter().enumerate() {
                m[c] += tree.predict(row);
            }
        }
        m
    }

    pub fn predict_class(&self, row: &[f64]) -> usize {
        let m = self.margins(row);
        let mut best = 0;
        for (c, v) in m.iter().enumerate() {
            if *v > m[best] {
                best = c;
            }
        }
        best
    }
}

pub fn softmax(margins: &[f64]) -> Vec<f64> {
    let max = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = margins.iter().map(|m| (m - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Fits the ensemble on (rows, labels in 0..classes).
pub fn train(
    rows: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    feature_ids: Vec<FeatureId>,
    hp: &Hyperparams,
) -> Result<SurrogateModel> {
    let n = rows.len();
    if n == 0 || labels.len() != n {
        return Err(Error::Numeric("training data empty or misaligned".into()));
    }
    if classes < 2 {
        return Err(Error::Numeric("need at least two classes".into()));
    }
    let mut margins = vec![vec![0.0; classes]; n];
    let mut trees: Vec<Vec<Tree>> = Vec::with_capacity(hp.rounds);
    let mut train_loss_trace = Vec::with_capacity(hp.rounds);

    for _ in 0..hp.rounds {
        let probs: Vec<Vec<f64>> = margins.iter().map(|m| softmax(m)).collect();
        let mut round_trees = Vec::with_capacity(classes);
        for c in 0..classes {
            let grad: Vec<f64> = (0..n)
                .map(|i| probs[i][c] - if labels[i] == c { 1.0 } else { 0.0 })
                .collect();
            let hess: Vec<f64> = (0..n).map(|i| probs[i][c] * (1.0 - probs[i][c])).collect();
            let indices: Vec<usize> = (0..n).collect();
            let mut nodes = Vec::new();
            grow(rows, &grad, &hess, indices, 0, hp, &mut nodes);
            let tree = Tree { nodes };
            for (i, row) in rows.iter().enumerate() {
                margins[i][c] += tree.predict(row);
            }
            round_trees.push(tree);
        }
        trees.push(round_trees);
        let loss: f64 = (0..n)
            .map(|i| -softmax(&margins[i])[labels[i]].max(1e-300).ln())
            .sum::<f64>()
            / n as f64;
        train_loss_trace.push(loss);
    }
    Ok(SurrogateModel {
        classes,
        trees,
        hyperparams: hp.clone(),
        feature_ids,
        train_loss_trace,
    })
}

struct Split {
    gain: f64,
    feature: usize,
    threshold: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

/// Recursively grows a tree; returns the index of the created node.
fn grow(
    rows: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    indices: Vec<usize>,
    depth: usize,
    hp: &Hyperparams,
    nodes: &mut Vec<Node>,
) -> usize {
    let g: f64 = indices.iter().map(|&i| grad[i]).sum();
    let h: f64 = indices.iter().map(|&i| hess[i]).sum();
    let cover = indices.len() as f64;
    let leaf_value = -g / (h + hp.lambda) * hp.learning_rate;

    let split = if depth < hp.max_depth {
        best_split(rows, grad, hess, &indices, g, h, hp)
    } else {
        None
    };
    match split {
        None => {
            nodes.push(Node::leaf(leaf_value, cover));
            nodes.len() - 1
        }
        Some(s) => {
            let idx = nodes.len();
            nodes.push(Node {
                feature: Some(s.feature),
                threshold: s.threshold,
                left: usize::MAX,
                right: usize::MAX,
                value: 0.0,
                cover,
            });
            let left = grow(rows, grad, hess, s.left, depth + 1, hp, nodes);
            let right = grow(rows, grad, hess, s.right, depth + 1, hp, nodes);
            nodes[idx].left = left;
            nodes[idx].right = right;
            idx
        }
    }
}

/// Exact greedy split search. A split is admissible when both children carry
/// min_child_weight of hessian mass, and wins only with a strictly positive
/// gamma-regularized gain. Ties keep the lowest feature id, then the lowest
/// threshold (scan order).
fn best_split(
    rows: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    indices: &[usize],
    g_total: f64,
    h_total: f64,
    hp: &Hyperparams,
) -> Option<Split> {
    let n_features = rows[0].len();
    let parent_score = g_total * g_total / (h_total + hp.lambda);
    let mut best: Option<Split> = None;

    for f in 0..n_features {
        let mut order: Vec<usize> = indices.to_vec();
        order.sort_by(|&a, &b| {
            rows[a][f]
                .partial_cmp(&rows[b][f])
                .expect("finite features")
        });
        let mut gl = 0.0;
        let mut hl = 0.0;
        for w in 0..order.len().saturating_sub(1) {
            let i = order[w];
            gl += grad[i];
            hl += hess[i];
            let v = rows[i][f];
            let v_next = rows[order[w + 1]][f];
            if v == v_next {
                continue;
            }
            let gr = g_total - gl;
            let hr = h_total - hl;
            if hl < hp.min_child_weight || hr < hp.min_child_weight {
                continue;
            }
            let gain = 0.5
                * (gl * gl / (hl + hp.lambda) + gr * gr / (hr + hp.lambda) - parent_score)
                - hp.gamma;
            if gain <= 0.0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => gain > b.gain,
            };
            if better {
                let threshold = (v + v_next) / 2.0;
                let (left, right): (Vec<usize>, Vec<usize>) =
                    indices.iter().partition(|&&i| rows[i][f] < threshold);
                best = Some(Split {
                    gain,
                    feature: f,
                    threshold,
                    left,
                    right,
                });
            }
        }
    }
    best
}
