//! Exact per-tree Shapley attributions for tree ensembles, using the
//! path-dependent algorithm: feature subsets are evaluated by descending the
//! tree, taking cover-weighted averages whenever a split feature is outside
//! the subset. Summed over trees and rounds per class; local accuracy
//! (sum of attributions + base = raw margin) holds by construction.

use super::boost::{SurrogateModel, Tree};

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: usize,
    zero_fraction: f64,
    one_fraction: f64,
    pweight: f64,
}

impl Default for PathElement {
    fn default() -> Self {
        PathElement {
            feature: usize::MAX,
            zero_fraction: 0.0,
            one_fraction: 0.0,
            pweight: 0.0,
        }
    }
}

fn extend_path(
    path: &mut Vec<PathElement>,
    unique_depth: usize,
    zero_fraction: f64,
    one_fraction: f64,
    feature: usize,
) {
    if path.len() <= unique_depth {
        path.resize(unique_depth + 1, PathElement::default());
    }
    path[unique_depth] = PathElement {
        feature,
        zero_fraction,
        one_fraction,
        pweight: if unique_depth == 0 { 1.0 } else { 0.0 },
    };
    for i in (0..unique_depth).rev() {
        path[i + 1].pweight +=
            one_fraction * path[i].pweight * (i + 1) as f64 / (unique_depth + 1) as f64;
        path[i].pweight =
            zero_fraction * path[i].pweight * (unique_depth - i) as f64 / (unique_depth + 1) as f64;
    }
}

fn unwind_path(path: &mut [PathElement], unique_depth: usize, index: usize) {
    let one_fraction = path[index].one_fraction;
    let zero_fraction = path[index].zero_fraction;
    let mut next_one_portion = path[unique_depth].pweight;
    for i in (0..unique_depth).rev() {
        if one_fraction != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight =
                next_one_portion * (unique_depth + 1) as f64 / ((i + 1) as f64 * one_fraction);
            next_one_portion = tmp
                - path[i].pweight * zero_fraction * (unique_depth - i) as f64
                    / (unique_depth + 1) as f64;
        } else {
            path[i].pweight = path[i].pweight * (unique_depth + 1) as f64
                / (zero_fraction * (unique_depth - i) as f64);
        }
    }
    for i in index..unique_depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

fn unwound_path_sum(path: &[PathElement], unique_depth: usize, index: usize) -> f64 {
    let one_fraction = path[index].one_fraction;
    let zero_fraction = path[index].zero_fraction;
    let mut next_one_portion = path[unique_depth].pweight;
    let mut total = 0.0;
    for i in (0..unique_depth).rev() {
        if one_fraction != 0.0 {
            let tmp =
                next_one_portion * (unique_depth + 1) as f64 / ((i + 1) as f64 * one_fraction);
            total += tmp;
            next_one_portion = path[i].pweight
                - tmp * zero_fraction * ((unique_depth - i) as f64 / (unique_depth + 1) as f64);
        } else if zero_fraction != 0.0 {
            total += path[i].pweight
                / (zero_fraction * ((unique_depth - i) as f64 / (unique_depth + 1) as f64));
        } else {
            debug_assert_eq!(path[i].pweight, 0.0);
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn tree_shap_recurse(
    tree: &Tree,
    row: &[f64],
    phi: &mut [f64],
    node_index: usize,
    mut unique_depth: usize,
    mut path: Vec<PathElement>,
    parent_zero_fraction: f64,
    parent_one_fraction: f64,
    parent_feature: usize,
) {
    let node = &tree.nodes[node_index];
    extend_path(
        &mut path,
        unique_depth,
        parent_zero_fraction,
        parent_one_fraction,
        parent_feature,
    );
    match node.feature {
        None => {
            for i in 1..=unique_depth {
                let w = unwound_path_sum(&path, unique_depth, i);
                let el = &path[i];
                phi[el.feature] += w * (el.one_fraction - el.zero_fraction) * node.value;
            }
        }
        Some(split_feature) => {
            let hot = if row[split_feature] < node.threshold {
                node.left
            } else {
                node.right
            };
            let cold = if hot == node.left {
                node.right
            } else {
                node.left
            };

            let mut incoming_zero_fraction = 1.0;
            let mut incoming_one_fraction = 1.0;
            // a feature already on the path is unwound and its fractions fold
            // into the new step
            if let Some(prev) = (0..=unique_depth).find(|&i| path[i].feature == split_feature) {
                incoming_zero_fraction = path[prev].zero_fraction;
                incoming_one_fraction = path[prev].one_fraction;
                unwind_path(&mut path, unique_depth, prev);
                unique_depth -= 1;
            }

            let hot_zero = tree.nodes[hot].cover / node.cover * incoming_zero_fraction;
            let cold_zero = tree.nodes[cold].cover / node.cover * incoming_zero_fraction;
            tree_shap_recurse(
                tree,
                row,
                phi,
                hot,
                unique_depth + 1,
                path.clone(),
                hot_zero,
                incoming_one_fraction,
                split_feature,
            );
            tree_shap_recurse(
                tree,
                row,
                phi,
                cold,
                unique_depth + 1,
                path,
                cold_zero,
                0.0,
                split_feature,
            );
        }
    }
}

/// Adds one tree's attributions for `row` into `phi` (length = feature
/// count). The sentinel parent feature never matches a real split.
pub fn tree_shap(tree: &Tree, row: &[f64], phi: &mut [f64]) {
    tree_shap_recurse(
        tree,
        row,
        phi,
        0,
        0,
        Vec::with_capacity(8),
        1.0,
        1.0,
        usize::MAX - 1,
    );
}

/// Attribution matrices per class. `values[c][i][f]` is the contribution of
/// feature f to instance i's raw margin for class c; `base[c]` is the
/// cover-weighted expected margin.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapMatrix {
    pub feature_count: usize,
    pub base: Vec<f64>,
    pub values: Vec<Vec<Vec<f64>>>,
}

/// Exact attributions for every row, per class, summed over rounds.
pub fn shap_values(model: &SurrogateModel, rows: &[Vec<f64>]) -> crate::error::Result<ShapMatrix> {
    let n_features = model.feature_ids.len();
    for row in rows {
        if row.len() != n_features {
            return Err(crate::error::Error::Numeric(format!(
                "shap: expected {n_features} features, got {}",
                row.len()
            )));
        }
    }
    let mut base = vec![0.0; model.classes];
    for round in &model.trees {
        for (c, tree) in round.iter().enumerate() {
            base[c] += tree.expected_value();
        }
    }
    let mut values = vec![vec![vec![0.0; n_features]; rows.len()]; model.classes];
    for (i, row) in rows.iter().enumerate() {
        for round in &model.trees {
            for (c, tree) in round.iter().enumerate() {
                tree_shap(tree, row, &mut values[c][i]);
            }
        }
    }
    Ok(ShapMatrix {
        feature_count: n_features,
        base,
        values,
    })
}

/// Path-dependent conditional expectation of one tree given the features in
/// `subset` take `row`'s values: the value function of the Shapley game.
/// Shared by the production algorithm's tests and the acceptance oracle.
pub fn tree_expectation_given(tree: &Tree, row: &[f64], subset: &[usize]) -> f64 {
    fn walk(tree: &Tree, idx: usize, row: &[f64], subset: &[usize]) -> f64 {
        let node = &tree.nodes[idx];
        match node.feature {
            None => node.value,
            Some(f) => {
                if subset.contains(&f) {
                    let next = if row[f] < node.threshold {
                        node.left
                    } else {
                        node.right
                    };
                    walk(tree, next, row, subset)
                } else {
                    let l = &tree.nodes[node.left];
                    let r = &tree.nodes[node.right];
                    (l.cover * walk(tree, node.left, row, subset)
                        + r.cover * walk(tree, node.right, row, subset))
                        / node.cover
                }
            }
        }
    }
    walk(tree, 0, row, subset)
}

/// Brute-force Shapley enumeration over all feature subsets. Exponential in
/// the feature count; the independent oracle for fixtures with few features.
pub fn brute_force_shap(trees: &[&Tree], row: &[f64], n_features: usize) -> Vec<f64> {
    let mut factorial = vec![1.0f64; n_features + 1];
    for i in 1..=n_features {
        factorial[i] = factorial[i - 1] * i as f64;
    }
    let value = |subset: &[usize]| -> f64 {
        trees
            .iter()
            .map(|t| tree_expectation_given(t, row, subset))
            .sum()
    };
    let mut phi = vec![0.0; n_features];
    for f in 0..n_features {
        let others: Vec<usize> = (0..n_features).filter(|&x| x != f).collect();
        for bits in 0..(1u32 << others.len()) {
            let subset: Vec<usize> = others
                .iter()
                .enumerate()
                .filter(|(pos, _)| bits >> pos & 1 == 1)
                .map(|(_, &x)| x)
                .collect();
            let s = subset.len();
            let weight = factorial[s] * factorial[n_features - s - 1] / factorial[n_features];
            let mut with_f = subset.clone();
            with_f.push(f);
            phi[f] += weight * (value(&with_f) - value(&subset));
        }
    }
    phi
}
