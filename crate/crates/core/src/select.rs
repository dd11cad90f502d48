//! Feature selection: pairwise Pearson correlation pruning and z-score
//! scaling. The population (1/n) variance convention is used throughout the
//! crate (Pearson, z-scores, Gower ranges, GMM), so all moments agree.

use std::path::Path;

use log::warn;

use crate::catalog::FeatureId;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::textio;

/// Symmetric l x l Pearson matrix in catalog order.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub ids: Vec<FeatureId>,
    values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn size(&self) -> usize {
        self.ids.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("feature");
        for id in &self.ids {
            out.push('\t');
            out.push_str(&id.to_string());
        }
        out.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(&id.to_string());
            for j in 0..self.ids.len() {
                out.push('\t');
                out.push_str(&textio::fmt_f64(self.values[i][j]));
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise sample Pearson over rows unmasked in both columns. Zero-variance
/// columns correlate 0 with everything (unit diagonal), keeping pruning
/// total.
pub fn pearson_matrix(m: &FeatureMatrix) -> Result<CorrelationMatrix> {
    let n = m.n_rows();
    let l = m.n_cols();
    if n < 2 {
        return Err(Error::Numeric("pearson needs at least 2 rows".into()));
    }
    for c in 0..l {
        let available = m.unmasked_column(c).len();
        if available < 2 {
            return Err(Error::Numeric(format!(
                "feature {} has {available} unmasked values; need at least 2",
                m.catalog.entries()[c].id
            )));
        }
    }
    let mut values = vec![vec![0.0; l]; l];
    for i in 0..l {
        values[i][i] = 1.0;
        for j in (i + 1)..l {
            let pairs: Vec<(f64, f64)> = (0..n)
                .filter(|&r| !m.is_masked(r, i) && !m.is_masked(r, j))
                .map(|r| (m.value(r, i), m.value(r, j)))
                .collect();
            let c = pearson(&pairs);
            values[i][j] = c;
            values[j][i] = c;
        }
    }
    Ok(CorrelationMatrix {
        ids: m.catalog.ids().collect(),
        values,
    })
}

fn pearson(pairs: &[(f64, f64)]) -> f64 {
    if pairs.len() < 2 {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in pairs {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return 0.0;
    }
    cov / (var_x.sqrt() * var_y.sqrt())
}

/// Outcome of correlation pruning: which features survive and which were
/// dropped against which partner.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub kept: Vec<FeatureId>,
    pub dropped: Vec<(FeatureId, FeatureId, f64)>,
}

impl SelectionResult {
    pub fn keep_all(ids: impl Iterator<Item = FeatureId>) -> SelectionResult {
        SelectionResult {
            kept: ids.collect(),
            dropped: Vec::new(),
        }
    }

    pub fn kept_indices(&self) -> Vec<usize> {
        self.kept.iter().map(|id| id.index()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("status\tfeature\tpartner\tabs_corr\n");
        for id in &self.kept {
            out.push_str(&format!("kept\t{id}\t-\t-\n"));
        }
        for (id, partner, corr) in &self.dropped {
            out.push_str(&format!(
                "dropped\t{id}\t{partner}\t{}\n",
                textio::fmt_f64(*corr)
            ));
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<SelectionResult> {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (line_no, line) in textio::data_lines(text) {
            let cols = textio::split_row(line);
            if cols[0] == "status" {
                continue;
            }
            if cols.len() != 4 {
                return Err(Error::record(path, line_no, "expected 4 columns"));
            }
            let id = FeatureId::parse(&cols[1])
                .ok_or_else(|| Error::record(path, line_no, format!("bad id {:?}", cols[1])))?;
            match cols[0].as_str() {
                "kept" => kept.push(id),
                "dropped" => {
                    let partner = FeatureId::parse(&cols[2]).ok_or_else(|| {
                        Error::record(path, line_no, format!("bad partner {:?}", cols[2]))
                    })?;
                    let corr = textio::parse_f64(&cols[3]).ok_or_else(|| {
                        Error::record(path, line_no, format!("bad corr {:?}", cols[3]))
                    })?;
                    dropped.push((id, partner, corr));
                }
                other => {
                    return Err(Error::record(
                        path,
                        line_no,
                        format!("bad status {other:?}"),
                    ));
                }
            }
        }
        Ok(SelectionResult { kept, dropped })
    }
}

/// Greedy scan in catalog order: for each pair (i < j) with |corr| above the
/// threshold and both still kept, the later feature j is dropped. Keeping the
/// lower catalog index makes "remove either feature" deterministic.
pub fn prune_correlated(c: &CorrelationMatrix, threshold: f64) -> Result<SelectionResult> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::config("threshold", "must be inside (0, 1)"));
    }
    let l = c.size();
    let mut kept_flags = vec![true; l];
    let mut dropped = Vec::new();
    for i in 0..l {
        if !kept_flags[i] {
            continue;
        }
        for j in (i + 1)..l {
            if !kept_flags[j] {
                continue;
            }
            let corr = c.value(i, j).abs();
            if corr > threshold {
                kept_flags[j] = false;
                dropped.push((c.ids[j], c.ids[i], corr));
            }
        }
    }
    let kept: Vec<FeatureId> = (0..l)
        .filter(|&i| kept_flags[i])
        .map(|i| c.ids[i])
        .collect();
    dropped.sort_by_key(|(id, _, _)| *id);
    Ok(SelectionResult { kept, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalePolicy {
    /// z-score continuous columns, pass binary columns through.
    ZscoreContinuous,
    None,
}

/// Matrix restricted to kept columns, scaled for the euclidean-space models.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMatrix {
    pub ids: Vec<FeatureId>,
    pub domains: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub policy: ScalePolicy,
    /// Per kept column: (mean, population stddev) used for scaling; (0, 1)
    /// for columns passed through.
    pub moments: Vec<(f64, f64)>,
}

impl ScaledMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.ids.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("domain");
        for id in &self.ids {
            out.push('\t');
            out.push_str(&id.to_string());
        }
        out.push('\n');
        for (r, row) in self.values.iter().enumerate() {
            out.push_str(&self.domains[r]);
            for v in row {
                out.push('\t');
                out.push_str(&textio::fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<ScaledMatrix> {
        let mut ids = Vec::new();
        let mut domains = Vec::new();
        let mut values = Vec::new();
        for (line_no, line) in textio::data_lines(text) {
            let cols = textio::split_row(line);
            if cols[0] == "domain" {
                for c in &cols[1..] {
                    ids.push(FeatureId::parse(c).ok_or_else(|| {
                        Error::record(path, line_no, format!("bad feature id {c:?}"))
                    })?);
                }
                continue;
            }
            if ids.is_empty() {
                return Err(Error::record(path, line_no, "missing header row"));
            }
            if cols.len() != ids.len() + 1 {
                return Err(Error::record(path, line_no, "wrong column count"));
            }
            let mut row = Vec::with_capacity(ids.len());
            for c in &cols[1..] {
                row.push(
                    textio::parse_f64(c)
                        .ok_or_else(|| Error::record(path, line_no, format!("bad number {c:?}")))?,
                );
            }
            domains.push(cols[0].clone());
            values.push(row);
        }
        let moments = vec![(0.0, 1.0); ids.len()];
        Ok(ScaledMatrix {
            ids,
            domains,
            values,
            policy: ScalePolicy::ZscoreContinuous,
            moments,
        })
    }
}

/// Restricts to kept columns and scales: continuous (count/ratio/score)
/// columns are z-scored with population stddev, binary columns pass through,
/// constant columns become all-zero with a warning. Masked cells keep the
/// imputation value through scaling of their column.
pub fn standardize(m: &FeatureMatrix, sel: &SelectionResult, policy: ScalePolicy) -> ScaledMatrix {
    let cols = sel.kept_indices();
    let n = m.n_rows();
    let mut values = vec![Vec::with_capacity(cols.len()); n];
    let mut moments = Vec::with_capacity(cols.len());
    for &c in &cols {
        let raw: Vec<f64> = (0..n).map(|r| m.value(r, c)).collect();
        let scale = policy == ScalePolicy::ZscoreContinuous && !m.column_kind(c).is_binary();
        let (mean, std) = if scale {
            let mean = raw.iter().sum::<f64>() / n as f64;
            let var = raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            (mean, var.sqrt())
        } else {
            (0.0, 1.0)
        };
        if scale && std == 0.0 {
            warn!(
                "feature {} is constant; scaled column set to 0",
                m.catalog.entries()[c].id
            );
        }
        for (r, v) in raw.iter().enumerate() {
            let scaled = if !scale {
                *v
            } else if std == 0.0 {
                0.0
            } else {
                (v - mean) / std
            };
            values[r].push(scaled);
        }
        moments.push((mean, std));
    }
    ScaledMatrix {
        ids: sel.kept.clone(),
        domains: m.domains.clone(),
        values,
        policy,
        moments,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::catalog_default;

    /// Matrix whose first columns are handy continuous counts.
    fn matrix_from_columns(cols: Vec<Vec<f64>>) -> FeatureMatrix {
        let catalog = catalog_default();
        let n = cols[0].len();
        let l = catalog.len();
        let mut rows = vec![vec![0.0; l]; n];
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                rows[r][c] = *v;
            }
        }
        let domains = (0..n).map(|i| format!("site{i}.com")).collect();
        let mask = vec![vec![false; l]; n];
        FeatureMatrix::new(catalog, domains, rows, mask).unwrap()
    }

    #[test]
    fn pearson_hand_value() {
        // corr([1,2,3],[1,2,4]) = sqrt(27/28)
        let m = matrix_from_columns(vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 4.0]]);
        let c = pearson_matrix(&m).unwrap();
        let expect = (27.0f64 / 28.0).sqrt();
        assert!((c.value(0, 1) - expect).abs() < 1e-12, "{}", c.value(0, 1));
        assert_eq!(c.value(0, 0), 1.0);
    }

    #[test]
    fn pearson_sign_flip() {
        let m = matrix_from_columns(vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]]);
        let c = pearson_matrix(&m).unwrap();
        assert!((c.value(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_drops_later() {
        let m = matrix_from_columns(vec![vec![1.0, 2.0, 5.0], vec![1.0, 2.0, 5.0]]);
        let c = pearson_matrix(&m).unwrap();
        let sel = prune_correlated(&c, 0.6).unwrap();
        assert!(sel.kept.contains(&FeatureId(1)));
        assert!(!sel.kept.contains(&FeatureId(2)));
        assert_eq!(sel.dropped[0].0, FeatureId(2));
        assert_eq!(sel.dropped[0].1, FeatureId(1));
    }

    #[test]
    fn pruning_is_idempotent() {
        let m = matrix_from_columns(vec![
            vec![1.0, 2.0, 5.0, 7.0],
            vec![1.0, 2.0, 5.0, 7.0],
            vec![0.0, 1.0, 0.0, 1.0],
        ]);
        let c = pearson_matrix(&m).unwrap();
        let first = prune_correlated(&c, 0.6).unwrap();
        // prune again over the surviving submatrix: nothing changes
        let survivors: Vec<usize> = first.kept.iter().map(|id| id.index()).collect();
        for (a, &i) in survivors.iter().enumerate() {
            for &j in survivors.iter().skip(a + 1) {
                assert!(c.value(i, j).abs() <= 0.6);
            }
        }
    }

    #[test]
    fn zscore_hand_values() {
        let m = matrix_from_columns(vec![vec![2.0, 4.0, 6.0]]);
        let sel = SelectionResult {
            kept: vec![FeatureId(1)],
            dropped: vec![],
        };
        let s = standardize(&m, &sel, ScalePolicy::ZscoreContinuous);
        let expect = 1.5f64.sqrt(); // population std of {2,4,6} is sqrt(8/3); (6-4)/sqrt(8/3)=sqrt(3/2)
        assert!((s.values[0][0] + expect).abs() < 1e-12);
        assert!(s.values[1][0].abs() < 1e-12);
        assert!((s.values[2][0] - expect).abs() < 1e-12);
    }

    #[test]
    fn binary_passthrough_and_constant_zeroing() {
        // f7 is binary; f1 constant
        let catalog = catalog_default();
        let n = 3;
        let mut rows = vec![vec![0.0; catalog.len()]; n];
        for (r, row) in rows.iter_mut().enumerate() {
            row[0] = 5.0; // f1 constant count
            row[6] = if r > 0 { 1.0 } else { 0.0 }; // f7 binary
        }
        let m = FeatureMatrix::new(
            catalog,
            (0..n).map(|i| format!("s{i}.com")).collect(),
            rows,
            vec![vec![false; 34]; n],
        )
        .unwrap();
        let sel = SelectionResult {
            kept: vec![FeatureId(1), FeatureId(7)],
            dropped: vec![],
        };
        let s = standardize(&m, &sel, ScalePolicy::ZscoreContinuous);
        assert_eq!(s.values[0], vec![0.0, 0.0]);
        assert_eq!(s.values[1], vec![0.0, 1.0]);
        assert_eq!(s.values[2], vec![0.0, 1.0]);
    }

    #[test]
    fn zscored_columns_have_unit_moments() {
        let m = matrix_from_columns(vec![vec![1.0, 5.0, 9.0, 2.0, 8.0]]);
        let sel = SelectionResult {
            kept: vec![FeatureId(1)],
            dropped: vec![],
        };
        let s = standardize(&m, &sel, ScalePolicy::ZscoreContinuous);
        let col: Vec<f64> = s.values.iter().map(|r| r[0]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 1e-9);
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }
}
