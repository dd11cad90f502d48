//! Gower distance over the mixed binary/continuous feature matrix: the mean
//! over comparable features of per-feature dissimilarities, where binary
//! features contribute a 0/1 mismatch and continuous features contribute
//! |xi - xj| / range. Bounded in [0, 1].

use log::warn;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::select::SelectionResult;

use super::{DistanceMatrix, DistanceMetric};

/// Builds the pairwise Gower matrix over the kept features. Masked cells are
/// excluded from the per-pair mean with renormalization; zero-range
/// continuous features contribute 0.
pub fn gower_distance(m: &FeatureMatrix, sel: &SelectionResult) -> Result<DistanceMatrix> {
    let cols = sel.kept_indices();
    if cols.is_empty() {
        return Err(Error::Numeric(
            "gower needs at least one kept feature".into(),
        ));
    }
    let n = m.n_rows();

    // per-feature range over unmasked rows
    let mut ranges = Vec::with_capacity(cols.len());
    for &c in &cols {
        let col = m.unmasked_column(c);
        let min = col.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
        let max = col
            .iter()
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let range = if col.is_empty() { 0.0 } else { max - min };
        if range == 0.0 && !m.column_kind(c).is_binary() {
            warn!(
                "feature {} has zero range; it contributes 0 to gower distance",
                m.catalog.entries()[c].id
            );
        }
        ranges.push(range);
    }

    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut total = 0.0;
            let mut comparable = 0usize;
            for (idx, &c) in cols.iter().enumerate() {
                if m.is_masked(i, c) || m.is_masked(j, c) {
                    continue;
                }
                comparable += 1;
                let xi = m.value(i, c);
                let xj = m.value(j, c);
                let contribution = if m.column_kind(c).is_binary() {
                    if xi != xj {
                        1.0
                    } else {
                        0.0
                    }
                } else if ranges[idx] == 0.0 {
                    0.0
                } else {
                    (xi - xj).abs() / ranges[idx]
                };
                total += contribution;
            }
            // pairs with no comparable feature default to 0 (logged);
            // in practice lexical/TLD features are never masked
            let d = if comparable == 0 {
                warn!("rows {i} and {j} share no unmasked features; distance set to 0");
                0.0
            } else {
                total / comparable as f64
            };
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DistanceMatrix::from_values(DistanceMetric::Gower, n, values)
}
