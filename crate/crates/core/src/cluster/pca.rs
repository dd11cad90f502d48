//! Deterministic 2-D PCA for the cluster plots: cyclic Jacobi
//! eigendecomposition of the population covariance matrix, components
//! sign-fixed by making each one's largest-magnitude loading positive.

use crate::error::{Error, Result};
use crate::select::ScaledMatrix;
use crate::textio;

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
/// Returns (eigenvalues, eigenvectors as columns), sorted by descending
/// eigenvalue.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let (mip, miq) = (m[i][p], m[i][q]);
                    m[i][p] = c * mip - s * miq;
                    m[i][q] = s * mip + c * miq;
                }
                for j in 0..n {
                    let (mpj, mqj) = (m[p][j], m[q][j]);
                    m[p][j] = c * mpj - s * mqj;
                    m[q][j] = s * mpj + c * mqj;
                }
                for i in 0..n {
                    let (vip, viq) = (v[i][p], v[i][q]);
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a_, &b_| {
        m[b_][b_]
            .partial_cmp(&m[a_][a_])
            .expect("finite eigenvalues")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// n x 2 coordinates of the centered data in the top-2 component basis.
    pub coords: Vec<[f64; 2]>,
    pub eigenvalues: Vec<f64>,
    pub components: [Vec<f64>; 2],
}

impl PcaProjection {
    pub fn to_text(&self, domains: &[String]) -> String {
        let mut out = String::from("domain\tpc1\tpc2\n");
        for (i, c) in self.coords.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                domains.get(i).map(String::as_str).unwrap_or(""),
                textio::fmt_f64(c[0]),
                textio::fmt_f64(c[1])
            ));
        }
        out
    }
}

/// Projects onto the top-2 principal components of the population covariance.
pub fn pca_project(x: &ScaledMatrix) -> Result<PcaProjection> {
    let n = x.n_rows();
    let dim = x.n_cols();
    if dim < 2 {
        return Err(Error::Numeric("pca needs at least 2 columns".into()));
    }
    if n == 0 {
        return Err(Error::Numeric("pca needs at least 1 row".into()));
    }
    let mean: Vec<f64> = (0..dim)
        .map(|d| x.values.iter().map(|r| r[d]).sum::<f64>() / n as f64)
        .collect();
    let centered: Vec<Vec<f64>> = x
        .values
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let mut cov = vec![vec![0.0; dim]; dim];
    for row in &centered {
        for i in 0..dim {
            for j in i..dim {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            cov[i][j] /= n as f64;
            cov[j][i] = cov[i][j];
        }
    }
    let (eigenvalues, mut eigenvectors) = symmetric_eigen(&cov);

    // sign convention: largest-magnitude loading positive
    for vec in eigenvectors.iter_mut().take(2) {
        let lead = vec
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).expect("finite"))
            .map(|(i, _)| i)
            .expect("nonempty vector");
        if vec[lead] < 0.0 {
            for v in vec.iter_mut() {
                *v = -*v;
            }
        }
    }

    let coords = centered
        .iter()
        .map(|row| {
            [
                row.iter().zip(&eigenvectors[0]).map(|(a, b)| a * b).sum(),
                row.iter().zip(&eigenvectors[1]).map(|(a, b)| a * b).sum(),
            ]
        })
        .collect();
    Ok(PcaProjection {
        coords,
        eigenvalues,
        components: [eigenvectors[0].clone(), eigenvectors[1].clone()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::FeatureId;
    use crate::select::ScalePolicy;

    fn scaled(rows: Vec<Vec<f64>>) -> ScaledMatrix {
        let dim = rows[0].len();
        ScaledMatrix {
            ids: (1..=dim).map(|i| FeatureId(i as u8)).collect(),
            domains: (0..rows.len()).map(|i| format!("s{i}")).collect(),
            values: rows,
            policy: ScalePolicy::None,
            moments: vec![(0.0, 1.0); dim],
        }
    }

    #[test]
    fn axis_aligned_identity_case() {
        // variance concentrated on axis 0, then axis 1
        let x = scaled(vec![
            vec![4.0, 0.1],
            vec![-4.0, -0.1],
            vec![2.0, 0.05],
            vec![-2.0, -0.05],
        ]);
        let p = pca_project(&x).unwrap();
        for (i, row) in x.values.iter().enumerate() {
            assert!((p.coords[i][0] - row[0]).abs() < 0.02);
        }
    }

    #[test]
    fn rank_one_second_component_is_null() {
        let x = scaled(vec![
            vec![1.0, 2.0],
            vec![2.0, 4.0],
            vec![3.0, 6.0],
            vec![-1.0, -2.0],
        ]);
        let p = pca_project(&x).unwrap();
        for c in &p.coords {
            assert!(c[1].abs() < 1e-8);
        }
    }

    #[test]
    fn reconstruction_error_equals_discarded_eigenvalues() {
        let x = scaled(vec![
            vec![3.0, 1.0, 0.5, 2.0],
            vec![1.0, 4.0, 1.5, 0.0],
            vec![2.0, 2.0, 3.5, 1.0],
            vec![0.0, 1.0, 2.5, 3.0],
            vec![4.0, 0.0, 1.0, 2.5],
            vec![1.5, 3.0, 0.5, 1.5],
        ]);
        let p = pca_project(&x).unwrap();
        let n = x.n_rows() as f64;
        let dim = x.n_cols();
        let mean: Vec<f64> = (0..dim)
            .map(|d| x.values.iter().map(|r| r[d]).sum::<f64>() / n)
            .collect();
        // mean squared residual = total variance - captured variance
        let total: f64 = x
            .values
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&mean)
                    .map(|(v, m)| (v - m) * (v - m))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n;
        let captured: f64 = p
            .coords
            .iter()
            .map(|c| c[0] * c[0] + c[1] * c[1])
            .sum::<f64>()
            / n;
        let discarded: f64 = p.eigenvalues[2..].iter().sum();
        assert!((total - captured - discarded).abs() < 1e-8);
    }

    #[test]
    fn eigen_recovers_known_spectrum() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1
        let (vals, vecs) = symmetric_eigen(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        let v = &vecs[0];
        assert!((v[0].abs() - v[1].abs()).abs() < 1e-9);
    }
}
