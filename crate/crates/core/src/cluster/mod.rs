//! The four clustering models plus distance construction, cluster-validity
//! scores, k selection, and the PCA projection used for plotting. Every model
//! is deterministic given (data, seed, config) and relabels its output
//! canonically by first occurrence, so golden files stay stable.

pub mod gmm;
pub mod gower;
pub mod hierarchical;
pub mod kmeans;
pub mod kmedoids;
pub mod kselect;
pub mod pca;
pub mod validation;

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::select::ScaledMatrix;
use crate::textio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelId {
    KMeans,
    KMedoids,
    Hierarchical,
    Gmm,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [
        ModelId::KMeans,
        ModelId::KMedoids,
        ModelId::Hierarchical,
        ModelId::Gmm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelId::KMeans => "kmeans",
            ModelId::KMedoids => "kmedoids",
            ModelId::Hierarchical => "hierarchical",
            ModelId::Gmm => "gmm",
        }
    }

    pub fn parse(s: &str) -> Option<ModelId> {
        Some(match s {
            "kmeans" => ModelId::KMeans,
            "kmedoids" => ModelId::KMedoids,
            "hierarchical" => ModelId::Hierarchical,
            "gmm" => ModelId::Gmm,
            _ => return None,
        })
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    EuclideanScaled,
    Gower,
}

/// Symmetric pairwise distances with a metric tag.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub metric: DistanceMetric,
    n: usize,
    /// Row-major full matrix; kept simple since n stays desk-scale.
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_values(metric: DistanceMetric, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Numeric("distance matrix size mismatch".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::Numeric(format!("bad distance at ({i},{j}): {v}")));
                }
                if (v - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::Numeric(format!("asymmetry at ({i},{j})")));
                }
            }
            if values[i * n + i] != 0.0 {
                return Err(Error::Numeric(format!("nonzero diagonal at {i}")));
            }
        }
        Ok(DistanceMatrix { metric, n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Pairwise euclidean distances over the scaled feature space.
    pub fn euclidean(x: &ScaledMatrix) -> DistanceMatrix {
        let n = x.n_rows();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean_distance(&x.values[i], &x.values[j]);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        DistanceMatrix {
            metric: DistanceMetric::EuclideanScaled,
            n,
            values,
        }
    }

    pub fn to_text(&self) -> String {
        let tag = match self.metric {
            DistanceMetric::EuclideanScaled => "euclidean_scaled",
            DistanceMetric::Gower => "gower",
        };
        let mut out = format!("# metric\t{tag}\n");
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| textio::fmt_f64(self.get(i, j)))
                .collect();
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<DistanceMatrix> {
        let mut metric = DistanceMetric::Gower;
        for line in text.lines() {
            if let Some(tag) = line.strip_prefix("# metric\t") {
                metric = match tag.trim() {
                    "euclidean_scaled" => DistanceMetric::EuclideanScaled,
                    "gower" => DistanceMetric::Gower,
                    other => {
                        return Err(Error::record(path, 1, format!("bad metric {other:?}")));
                    }
                };
            }
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line_no, line) in textio::data_lines(text) {
            let mut row = Vec::new();
            for c in line.split('\t') {
                row.push(
                    textio::parse_f64(c)
                        .ok_or_else(|| Error::record(path, line_no, format!("bad number {c:?}")))?,
                );
            }
            rows.push(row);
        }
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::record(path, i + 1, "matrix is not square"));
            }
            values.extend_from_slice(row);
        }
        DistanceMatrix::from_values(metric, n, values)
    }
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Model-specific convergence diagnostics retained for reports.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostics {
    KMeans {
        /// SSE after each Lloyd iteration of the winning restart.
        inertia_trace: Vec<f64>,
        restarts: usize,
    },
    KMedoids {
        total_dissimilarity: f64,
        swaps: usize,
        medoids: Vec<usize>,
    },
    Hierarchical {
        /// (cluster_a, cluster_b, height, new_cluster_id) in merge order;
        /// singleton clusters are 0..n-1, merged clusters continue from n.
        merges: Vec<(usize, usize, f64, usize)>,
    },
    Gmm {
        log_likelihood_trace: Vec<f64>,
        aic: f64,
        bic: f64,
        respawns: usize,
    },
}

/// One model's partition of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelAssignment {
    pub model_id: ModelId,
    pub k: usize,
    /// Cluster labels in 1..=k, canonically renumbered by first occurrence.
    pub labels: Vec<usize>,
    pub diagnostics: Diagnostics,
    pub seed: u64,
}

impl ModelAssignment {
    /// Checks the partition invariant: labels in 1..=k, every cluster
    /// nonempty.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.k];
        for &l in &self.labels {
            if l == 0 || l > self.k {
                return Err(Error::Numeric(format!(
                    "{}: label {l} outside 1..={}",
                    self.model_id, self.k
                )));
            }
            seen[l - 1] = true;
        }
        if self.labels.len() >= self.k && seen.iter().any(|s| !s) {
            return Err(Error::Numeric(format!(
                "{}: some cluster in 1..={} is empty",
                self.model_id, self.k
            )));
        }
        Ok(())
    }
}

/// Renumbers labels to 1..=k by order of first occurrence.
pub fn canonical_relabel(raw: &[usize]) -> (Vec<usize>, usize) {
    let mut mapping: Vec<(usize, usize)> = Vec::new();
    let mut labels = Vec::with_capacity(raw.len());
    for &r in raw {
        let next = mapping.len() + 1;
        let mapped = match mapping.iter().find(|(from, _)| *from == r) {
            Some((_, to)) => *to,
            None => {
                mapping.push((r, next));
                next
            }
        };
        labels.push(mapped);
    }
    let k = mapping.len();
    (labels, k)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_relabel_first_occurrence() {
        let (labels, k) = canonical_relabel(&[7, 7, 2, 7, 9, 2]);
        assert_eq!(labels, vec![1, 1, 2, 1, 3, 2]);
        assert_eq!(k, 3);
    }

    #[test]
    fn distance_matrix_rejects_asymmetry() {
        let values = vec![0.0, 1.0, 2.0, 0.0];
        assert!(DistanceMatrix::from_values(DistanceMetric::Gower, 2, values).is_err());
    }

    #[test]
    fn distance_text_round_trip() {
        let values = vec![0.0, 0.5, 0.5, 0.0];
        let d = DistanceMatrix::from_values(DistanceMetric::Gower, 2, values).unwrap();
        let back = DistanceMatrix::from_text(&d.to_text(), Path::new("d")).unwrap();
        assert_eq!(back, d);
    }
}
