//! Cluster-validity scores: silhouette (the k-selection baseline) and the
//! Calinski-Harabasz ratio used as the k-means elbow cross-check.

use crate::error::{Error, Result};
use crate::select::ScaledMatrix;

use super::DistanceMatrix;

/// Mean silhouette over all points; see [`silhouette_samples`].
pub fn silhouette(labels: &[usize], d: &DistanceMatrix) -> Result<f64> {
    let samples = silhouette_samples(labels, d)?;
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Per-point silhouettes: s(i) = (b - a) / max(a, b), with a the mean
/// intra-cluster distance and b the nearest other-cluster mean. Singleton
/// clusters score 0 by convention, as do coincident points (a = b = 0).
pub fn silhouette_samples(labels: &[usize], d: &DistanceMatrix) -> Result<Vec<f64>> {
    let n = labels.len();
    if n != d.len() {
        return Err(Error::Numeric("labels/distance size mismatch".into()));
    }
    let k = *labels
        .iter()
        .max()
        .ok_or_else(|| Error::Numeric("silhouette needs at least one point".into()))?;
    if k < 2 {
        return Err(Error::Numeric(
            "silhouette undefined for a single cluster".into(),
        ));
    }
    let mut counts = vec![0usize; k + 1];
    for &l in labels {
        if l == 0 || l > k {
            return Err(Error::Numeric(format!("label {l} outside 1..={k}")));
        }
        counts[l] += 1;
    }
    if counts[1..].iter().any(|&c| c == 0) {
        return Err(Error::Numeric("empty cluster in silhouette input".into()));
    }

    let mut samples = vec![0.0; n];
    for i in 0..n {
        let own = labels[i];
        if counts[own] == 1 {
            continue; // singleton scores 0
        }
        // mean distance to every cluster
        let mut sums = vec![0.0; k + 1];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += d.get(i, j);
            }
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (1..=k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            samples[i] = (b - a) / denom;
        }
    }
    Ok(samples)
}

/// Calinski-Harabasz: (between-dispersion / (k-1)) / (within-dispersion /
/// (n-k)) in the scaled euclidean space. Zero within-dispersion returns the
/// +inf sentinel (perfectly separated duplicate blobs).
pub fn calinski_harabasz(x: &ScaledMatrix, labels: &[usize]) -> Result<f64> {
    let n = x.n_rows();
    if labels.len() != n {
        return Err(Error::Numeric("labels/matrix size mismatch".into()));
    }
    let k = *labels.iter().max().unwrap_or(&0);
    if k < 2 || k >= n {
        return Err(Error::Numeric(format!(
            "calinski-harabasz needs 2 <= k < n, got k={k}, n={n}"
        )));
    }
    let dim = x.n_cols();
    let mut global = vec![0.0; dim];
    for row in &x.values {
        for (d, v) in row.iter().enumerate() {
            global[d] += v;
        }
    }
    for g in &mut global {
        *g /= n as f64;
    }
    let mut centroids = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in x.values.iter().zip(labels) {
        counts[l - 1] += 1;
        for (d, v) in row.iter().enumerate() {
            centroids[l - 1][d] += v;
        }
    }
    for (c, count) in counts.iter().enumerate() {
        if *count == 0 {
            return Err(Error::Numeric("empty cluster".into()));
        }
        for d in 0..dim {
            centroids[c][d] /= *count as f64;
        }
    }
    let between: f64 = (0..k)
        .map(|c| {
            counts[c] as f64
                * centroids[c]
                    .iter()
                    .zip(&global)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
        })
        .sum();
    let within: f64 = x
        .values
        .iter()
        .zip(labels)
        .map(|(row, &l)| {
            row.iter()
                .zip(&centroids[l - 1])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}
