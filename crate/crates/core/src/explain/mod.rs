//! Cluster explanation: a gradient-boosted surrogate classifier trained on
//! the consensus labels, evaluated on a stratified hold-out, then explained
//! with exact tree Shapley attributions and per-cluster feature rankings.

pub mod boost;
pub mod shap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::catalog::FeatureId;
use crate::consensus::ConsensusResult;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::select::SelectionResult;
use crate::textio;

pub use boost::{Hyperparams, SurrogateModel};
pub use shap::{brute_force_shap, shap_values, ShapMatrix};

/// Hold-out quality of the surrogate. Metrics are macro-averaged and always
/// recomputable from the confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateMetrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// confusion[true][predicted], classes in label order 1..=K.
    pub confusion: Vec<Vec<usize>>,
    pub train_rows: usize,
    pub test_rows: usize,
}

impl SurrogateMetrics {
    pub fn from_confusion(confusion: Vec<Vec<usize>>, train_rows: usize) -> SurrogateMetrics {
        let k = confusion.len();
        let total: usize = confusion.iter().map(|r| r.iter().sum::<usize>()).sum();
        let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
        let accuracy = correct as f64 / total as f64;
        let mut precisions = Vec::with_capacity(k);
        let mut recalls = Vec::with_capacity(k);
        let mut f1s = Vec::with_capacity(k);
        for c in 0..k {
            let tp = confusion[c][c] as f64;
            let col: usize = (0..k).map(|r| confusion[r][c]).sum();
            let row: usize = confusion[c].iter().sum();
            let p = if col == 0 { 0.0 } else { tp / col as f64 };
            let r = if row == 0 { 0.0 } else { tp / row as f64 };
            let f1 = if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            };
            precisions.push(p);
            recalls.push(r);
            f1s.push(f1);
        }
        SurrogateMetrics {
            accuracy,
            macro_precision: precisions.iter().sum::<f64>() / k as f64,
            macro_recall: recalls.iter().sum::<f64>() / k as f64,
            macro_f1: f1s.iter().sum::<f64>() / k as f64,
            confusion,
            train_rows,
            test_rows: total,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("accuracy\t{}\n", textio::fmt_f64(self.accuracy)));
        out.push_str(&format!(
            "macro_precision\t{}\n",
            textio::fmt_f64(self.macro_precision)
        ));
        out.push_str(&format!(
            "macro_recall\t{}\n",
            textio::fmt_f64(self.macro_recall)
        ));
        out.push_str(&format!("macro_f1\t{}\n", textio::fmt_f64(self.macro_f1)));
        out.push_str(&format!("train_rows\t{}\n", self.train_rows));
        out.push_str(&format!("test_rows\t{}\n", self.test_rows));
        out
    }

    pub fn confusion_to_text(&self) -> String {
        let k = self.confusion.len();
        let mut out = String::from("true\\pred");
        for c in 1..=k {
            out.push_str(&format!("\tC{c}"));
        }
        out.push('\n');
        for (r, row) in self.confusion.iter().enumerate() {
            out.push_str(&format!("C{}", r + 1));
            for v in row {
                out.push_str(&format!("\t{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Stratified 80/20 split on label order with a seeded shuffle per class.
/// Every class keeps at least one row on each side.
pub fn stratified_split(
    labels: &[usize],
    test_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let k = labels.iter().copied().max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 1..=k {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let n = members.len();
        let want = (n as f64 * test_fraction).round() as usize;
        let n_test = want.clamp(1, n.saturating_sub(1).max(1));
        test.extend(members.drain(..n_test.min(members.len())));
        train.extend(members);
    }
    train.sort();
    test.sort();
    (train, test)
}

/// The trained surrogate plus everything needed to reuse the split.
#[derive(Debug, Clone)]
pub struct SurrogateOutcome {
    pub model: SurrogateModel,
    pub metrics: SurrogateMetrics,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Trains the surrogate on the unscaled kept features against consensus
/// labels. Requires at least two classes with two members each.
pub fn train_surrogate(
    matrix: &FeatureMatrix,
    selection: &SelectionResult,
    consensus: &ConsensusResult,
    hp: &Hyperparams,
    seed: u64,
) -> Result<SurrogateOutcome> {
    let labels = &consensus.final_labels;
    if labels.len() != matrix.n_rows() {
        return Err(Error::Numeric("labels/matrix row mismatch".into()));
    }
    let k = labels.iter().copied().max().unwrap_or(0);
    if k < 2 {
        return Err(Error::Numeric(
            "surrogate needs at least two distinct classes".into(),
        ));
    }
    for class in 1..=k {
        let count = labels.iter().filter(|&&l| l == class).count();
        if count < 2 {
            return Err(Error::Numeric(format!(
                "class {class} has {count} member(s); need at least 2 \
                 (merge clusters or re-seed)"
            )));
        }
    }
    let cols = selection.kept_indices();
    let rows: Vec<Vec<f64>> = (0..matrix.n_rows())
        .map(|r| cols.iter().map(|&c| matrix.value(r, c)).collect())
        .collect();
    let (train_indices, test_indices) = stratified_split(labels, 0.2, seed);
    let train_rows: Vec<Vec<f64>> = train_indices.iter().map(|&i| rows[i].clone()).collect();
    let train_labels: Vec<usize> = train_indices.iter().map(|&i| labels[i] - 1).collect();
    let model = boost::train(&train_rows, &train_labels, k, selection.kept.clone(), hp)?;

    let mut confusion = vec![vec![0usize; k]; k];
    for &i in &test_indices {
        let predicted = model.predict_class(&rows[i]);
        confusion[labels[i] - 1][predicted] += 1;
    }
    let metrics = SurrogateMetrics::from_confusion(confusion, train_indices.len());
    Ok(SurrogateOutcome {
        model,
        metrics,
        train_indices,
        test_indices,
    })
}

/// Per-cluster feature ranking: features ordered by descending mean |phi|,
/// with the sign of the correlation between feature value and attribution
/// (the "high value pushes this way" reading of a summary plot).
#[derive(Debug, Clone, PartialEq)]
pub struct ShapSummary {
    /// per class: (feature, mean |phi|, direction in {-1, 0, 1})
    pub per_class: Vec<Vec<(FeatureId, f64, i8)>>,
}

pub fn summarize(
    shap: &ShapMatrix,
    feature_ids: &[FeatureId],
    x_test: &[Vec<f64>],
) -> Result<ShapSummary> {
    if x_test.is_empty() {
        return Err(Error::Numeric("summarize needs a nonempty test set".into()));
    }
    let n = x_test.len();
    let mut per_class = Vec::with_capacity(shap.values.len());
    for class_values in &shap.values {
        let mut ranked: Vec<(FeatureId, f64, i8)> = feature_ids
            .iter()
            .enumerate()
            .map(|(f, &id)| {
                let mean_abs = class_values.iter().map(|row| row[f].abs()).sum::<f64>() / n as f64;
                let xs: Vec<f64> = x_test.iter().map(|r| r[f]).collect();
                let phis: Vec<f64> = class_values.iter().map(|r| r[f]).collect();
                (id, mean_abs, correlation_sign(&xs, &phis))
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite attributions")
                .then(a.0.cmp(&b.0))
        });
        per_class.push(ranked);
    }
    Ok(ShapSummary { per_class })
}

fn correlation_sign(xs: &[f64], ys: &[f64]) -> i8 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 || cov == 0.0 {
        0
    } else if cov > 0.0 {
        1
    } else {
        -1
    }
}

impl ShapSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::from("cluster\trank\tfeature\tmean_abs_phi\tdirection\n");
        for (c, ranked) in self.per_class.iter().enumerate() {
            for (rank, (id, mean_abs, dir)) in ranked.iter().enumerate() {
                out.push_str(&format!(
                    "C{}\t{}\t{id}\t{}\t{dir}\n",
                    c + 1,
                    rank + 1,
                    textio::fmt_f64(*mean_abs)
                ));
            }
        }
        out
    }
}

/// Raw phi export, one block per class.
pub fn shap_to_text(shap: &ShapMatrix, feature_ids: &[FeatureId], domains: &[String]) -> String {
    let mut out = String::new();
    out.push_str("# variant\ttree_path_dependent\n");
    for (c, class_values) in shap.values.iter().enumerate() {
        out.push_str(&format!(
            "# class\tC{}\tbase\t{}\n",
            c + 1,
            textio::fmt_f64(shap.base[c])
        ));
        out.push_str("domain");
        for id in feature_ids {
            out.push_str(&format!("\t{id}"));
        }
        out.push('\n');
        for (i, row) in class_values.iter().enumerate() {
            out.push_str(domains.get(i).map(String::as_str).unwrap_or(""));
            for v in row {
                out.push_str(&format!("\t{}", textio::fmt_f64(*v)));
            }
            out.push('\n');
        }
    }
    out
}
