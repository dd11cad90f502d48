//! The n x 34 feature matrix with its missingness mask. Rows follow dataset
//! order; columns follow catalog order. Masked cells hold the imputation
//! value 0 so the matrix is always fully numeric, and the mask lets reports
//! distinguish "absent" from "zero".

use std::path::Path;

use crate::catalog::{catalog_default, FeatureCatalog, FeatureId, FeatureKind};
use crate::error::{Error, Result};
use crate::textio;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub catalog: FeatureCatalog,
    pub domains: Vec<String>,
    rows: Vec<Vec<f64>>,
    mask: Vec<Vec<bool>>,
}

impl FeatureMatrix {
    pub fn new(
        catalog: FeatureCatalog,
        domains: Vec<String>,
        rows: Vec<Vec<f64>>,
        mask: Vec<Vec<bool>>,
    ) -> Result<FeatureMatrix> {
        let l = catalog.len();
        if rows.len() != domains.len() || mask.len() != rows.len() {
            return Err(Error::Numeric(
                "matrix row/domain/mask length mismatch".into(),
            ));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != l || mask[r].len() != l {
                return Err(Error::Numeric(format!("row {r} has wrong width")));
            }
            for (c, entry) in catalog.entries().iter().enumerate() {
                let v = row[c];
                if mask[r][c] {
                    if v != 0.0 {
                        return Err(Error::Numeric(format!(
                            "masked cell ({r},{}) must hold the imputation value 0",
                            entry.id
                        )));
                    }
                    continue;
                }
                let ok = match entry.kind {
                    FeatureKind::Binary => v == 0.0 || v == 1.0,
                    FeatureKind::Ratio => (0.0..=1.0).contains(&v),
                    FeatureKind::Count => v >= 0.0 && v.fract() == 0.0,
                    FeatureKind::Score => v.is_finite(),
                };
                if !ok {
                    return Err(Error::Numeric(format!(
                        "cell ({r},{}) = {v} violates kind {}",
                        entry.id, entry.kind
                    )));
                }
            }
        }
        Ok(FeatureMatrix {
            catalog,
            domains,
            rows,
            mask,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.catalog.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }

    pub fn is_masked(&self, row: usize, col: usize) -> bool {
        self.mask[row][col]
    }

    /// Column values with their row indices, masked cells skipped.
    pub fn unmasked_column(&self, col: usize) -> Vec<(usize, f64)> {
        (0..self.n_rows())
            .filter(|&r| !self.mask[r][col])
            .map(|r| (r, self.rows[r][col]))
            .collect()
    }

    pub fn column_kind(&self, col: usize) -> FeatureKind {
        self.catalog.entries()[col].kind
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("domain");
        for id in self.catalog.ids() {
            out.push('\t');
            out.push_str(&id.to_string());
        }
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            out.push_str(&self.domains[r]);
            for v in row {
                out.push('\t');
                out.push_str(&textio::fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn mask_to_text(&self) -> String {
        let mut out = String::from("domain");
        for id in self.catalog.ids() {
            out.push('\t');
            out.push_str(&id.to_string());
        }
        out.push('\n');
        for (r, row) in self.mask.iter().enumerate() {
            out.push_str(&self.domains[r]);
            for m in row {
                out.push('\t');
                out.push(if *m { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, matrix_path: &Path) -> Result<()> {
        textio::write_string(matrix_path, &self.to_text())?;
        textio::write_string(&mask_sidecar_path(matrix_path), &self.mask_to_text())
    }

    pub fn read(matrix_path: &Path) -> Result<FeatureMatrix> {
        let catalog = catalog_default();
        let text = textio::read_to_string(matrix_path)?;
        let (domains, rows) = parse_table(&text, matrix_path, catalog.len())?;
        let mask_path = mask_sidecar_path(matrix_path);
        let mask = if mask_path.is_file() {
            let mask_text = textio::read_to_string(&mask_path)?;
            let (_, mask_rows) = parse_table(&mask_text, &mask_path, catalog.len())?;
            mask_rows
                .into_iter()
                .map(|row| row.into_iter().map(|v| v != 0.0).collect())
                .collect()
        } else {
            vec![vec![false; catalog.len()]; rows.len()]
        };
        FeatureMatrix::new(catalog, domains, rows, mask)
    }
}

fn mask_sidecar_path(matrix_path: &Path) -> std::path::PathBuf {
    let mut name = matrix_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "matrix".into());
    name.push_str(".mask");
    matrix_path.with_file_name(name)
}

fn parse_table(text: &str, path: &Path, width: usize) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut domains = Vec::new();
    let mut rows = Vec::new();
    for (line_no, line) in textio::data_lines(text) {
        let cols = textio::split_row(line);
        if cols[0] == "domain" {
            // header: sanity-check the feature ids
            for (i, c) in cols[1..].iter().enumerate() {
                if FeatureId::parse(c) != Some(FeatureId(i as u8 + 1)) {
                    return Err(Error::record(
                        path,
                        line_no,
                        format!("unexpected header column {c:?}"),
                    ));
                }
            }
            continue;
        }
        if cols.len() != width + 1 {
            return Err(Error::record(
                path,
                line_no,
                format!("expected {} columns, got {}", width + 1, cols.len()),
            ));
        }
        let mut row = Vec::with_capacity(width);
        for c in &cols[1..] {
            let v = textio::parse_f64(c)
                .ok_or_else(|| Error::record(path, line_no, format!("bad number {c:?}")))?;
            row.push(v);
        }
        domains.push(cols[0].clone());
        rows.push(row);
    }
    Ok((domains, rows))
}
