//! Gaussian mixture model with diagonal covariances, fit by EM from a
//! k-means initialization. Diagonal covariance keeps the model well-posed
//! with binary feature columns at small n. Labels are the argmax
//! responsibilities; AIC/BIC come from the final log-likelihood.

use log::warn;

use crate::error::{Error, Result};
use crate::select::ScaledMatrix;

use super::{canonical_relabel, kmeans::kmeans, Diagnostics, ModelAssignment, ModelId};

const VARIANCE_FLOOR: f64 = 1e-6;
const LL_TOLERANCE: f64 = 1e-7;
const MAX_ITERS: usize = 500;
const MAX_RESPAWNS: usize = 10;

#[derive(Debug, Clone)]
struct Component {
    weight: f64,
    mean: Vec<f64>,
    var: Vec<f64>,
}

pub struct GmmFit {
    pub assignment: ModelAssignment,
    /// Per-point responsibilities, rows summing to 1.
    pub responsibilities: Vec<Vec<f64>>,
}

pub fn gmm(x: &ScaledMatrix, k: usize, seed: u64) -> Result<ModelAssignment> {
    Ok(gmm_fit(x, k, seed)?.assignment)
}

pub fn gmm_fit(x: &ScaledMatrix, k: usize, seed: u64) -> Result<GmmFit> {
    let n = x.n_rows();
    let dim = x.n_cols();
    if k == 0 || k > n {
        return Err(Error::Numeric(format!("gmm: k={k} outside 1..={n}")));
    }

    let mut components = init_from_kmeans(x, k, seed)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut resp = vec![vec![0.0; k]; n];
    let mut respawns = 0usize;

    for _ in 0..MAX_ITERS {
        // E-step with log-sum-exp for stability
        let mut ll = 0.0;
        for (i, row) in x.values.iter().enumerate() {
            let logp: Vec<f64> = components
                .iter()
                .map(|c| c.weight.ln() + log_gauss_diag(row, &c.mean, &c.var))
                .collect();
            let max = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logp.iter().map(|lp| (lp - max).exp()).sum();
            let log_total = max + sum.ln();
            ll += log_total;
            for (c, lp) in logp.iter().enumerate() {
                resp[i][c] = (lp - log_total).exp();
            }
        }

        // component collapse: re-spawn at the worst-explained point
        let weights: Vec<f64> = (0..k)
            .map(|c| resp.iter().map(|r| r[c]).sum::<f64>())
            .collect();
        if let Some(dead) = weights.iter().position(|&w| !w.is_finite() || w < 1e-10) {
            if respawns >= MAX_RESPAWNS {
                return Err(Error::Numeric(format!(
                    "gmm: component {dead} kept collapsing after {MAX_RESPAWNS} re-spawns"
                )));
            }
            respawns += 1;
            let worst = (0..n)
                .min_by(|&a, &b| {
                    let ma = resp[a].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mb = resp[b].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    ma.partial_cmp(&mb).expect("finite responsibilities")
                })
                .expect("nonempty data");
            warn!("gmm: re-spawning collapsed component {dead} at point {worst}");
            components[dead] = Component {
                weight: 1.0 / k as f64,
                mean: x.values[worst].clone(),
                var: global_variance(x),
            };
            renormalize_weights(&mut components);
            continue;
        }

        // convergence on the total log-likelihood
        if let Some(prev) = trace.last() {
            if ll - prev < LL_TOLERANCE {
                trace.push(ll);
                break;
            }
        }
        trace.push(ll);

        // M-step
        for (c, component) in components.iter_mut().enumerate() {
            let nk = weights[c];
            component.weight = nk / n as f64;
            for d in 0..dim {
                let mean = x
                    .values
                    .iter()
                    .zip(&resp)
                    .map(|(row, r)| r[c] * row[d])
                    .sum::<f64>()
                    / nk;
                component.mean[d] = mean;
                let var = x
                    .values
                    .iter()
                    .zip(&resp)
                    .map(|(row, r)| r[c] * (row[d] - mean).powi(2))
                    .sum::<f64>()
                    / nk;
                component.var[d] = var.max(VARIANCE_FLOOR);
            }
        }
    }

    let final_ll = *trace.last().expect("at least one EM iteration");
    // hard labels; any empty argmax component is treated as a collapse and
    // claims its best-supported point so the partition invariant holds
    let mut raw: Vec<usize> = resp.iter().map(|r| argmax(r)).collect();
    for c in 0..k {
        if !raw.contains(&c) {
            let best = (0..n)
                .max_by(|&a, &b| resp[a][c].partial_cmp(&resp[b][c]).expect("finite"))
                .expect("nonempty");
            warn!("gmm: component {c} had no argmax points; assigning point {best}");
            raw[best] = c;
        }
    }
    let (labels, actual_k) = canonical_relabel(&raw);
    debug_assert_eq!(actual_k, k);

    // diagonal covariance: k*(2*dim + 1) - 1 free parameters
    let p = (k * (2 * dim + 1) - 1) as f64;
    let aic = 2.0 * p - 2.0 * final_ll;
    let bic = p * (n as f64).ln() - 2.0 * final_ll;

    // reorder responsibility columns to match canonical labels
    let mut col_of_label = vec![0usize; k];
    for (i, &r) in raw.iter().enumerate() {
        col_of_label[labels[i] - 1] = r;
    }
    let responsibilities: Vec<Vec<f64>> = resp
        .iter()
        .map(|r| (0..k).map(|l| r[col_of_label[l]]).collect())
        .collect();

    Ok(GmmFit {
        assignment: ModelAssignment {
            model_id: ModelId::Gmm,
            k,
            labels,
            diagnostics: Diagnostics::Gmm {
                log_likelihood_trace: trace,
                aic,
                bic,
                respawns,
            },
            seed,
        },
        responsibilities,
    })
}

fn init_from_kmeans(x: &ScaledMatrix, k: usize, seed: u64) -> Result<Vec<Component>> {
    let n = x.n_rows() as f64;
    let dim = x.n_cols();
    let km = kmeans(x, k, seed)?;
    let mut components = Vec::with_capacity(k);
    for cluster in 1..=k {
        let members: Vec<&Vec<f64>> = x
            .values
            .iter()
            .zip(&km.labels)
            .filter(|(_, &l)| l == cluster)
            .map(|(row, _)| row)
            .collect();
        let m = members.len() as f64;
        let mean: Vec<f64> = (0..dim)
            .map(|d| members.iter().map(|row| row[d]).sum::<f64>() / m)
            .collect();
        let var: Vec<f64> = (0..dim)
            .map(|d| {
                let v = members
                    .iter()
                    .map(|row| (row[d] - mean[d]).powi(2))
                    .sum::<f64>()
                    / m;
                v.max(VARIANCE_FLOOR)
            })
            .collect();
        components.push(Component {
            weight: m / n,
            mean,
            var,
        });
    }
    Ok(components)
}

fn global_variance(x: &ScaledMatrix) -> Vec<f64> {
    let n = x.n_rows() as f64;
    (0..x.n_cols())
        .map(|d| {
            let mean = x.values.iter().map(|row| row[d]).sum::<f64>() / n;
            let var = x
                .values
                .iter()
                .map(|row| (row[d] - mean).powi(2))
                .sum::<f64>()
                / n;
            var.max(VARIANCE_FLOOR)
        })
        .collect()
}

fn renormalize_weights(components: &mut [Component]) {
    let total: f64 = components.iter().map(|c| c.weight).sum();
    for c in components {
        c.weight /= total;
    }
}

fn log_gauss_diag(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut lp = 0.0;
    for d in 0..x.len() {
        let diff = x[d] - mean[d];
        lp += -0.5 * ((2.0 * std::f64::consts::PI * var[d]).ln() + diff * diff / var[d]);
    }
    lp
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::FeatureId;
    use crate::select::ScalePolicy;

    fn scaled_2d(points: &[(f64, f64)]) -> ScaledMatrix {
        ScaledMatrix {
            ids: vec![FeatureId(1), FeatureId(2)],
            domains: (0..points.len()).map(|i| format!("s{i}")).collect(),
            values: points.iter().map(|(a, b)| vec![*a, *b]).collect(),
            policy: ScalePolicy::None,
            moments: vec![(0.0, 1.0); 2],
        }
    }

    #[test]
    fn tight_blobs_match_kmeans_hard_labels() {
        let points: Vec<(f64, f64)> = vec![
            (0.0, 0.1),
            (0.1, 0.0),
            (-0.1, 0.05),
            (10.0, 10.1),
            (10.1, 9.9),
            (9.9, 10.0),
        ];
        let x = scaled_2d(&points);
        let fit = gmm_fit(&x, 2, 40).unwrap();
        let km = kmeans(&x, 2, 40).unwrap();
        assert_eq!(fit.assignment.labels, km.labels);
        // responsibilities are essentially hard on separated blobs
        for r in &fit.responsibilities {
            let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(max > 0.999);
        }
    }

    #[test]
    fn k1_recovers_sample_moments() {
        let points = vec![(1.0, 2.0), (3.0, 4.0), (5.0, 0.0)];
        let x = scaled_2d(&points);
        let fit = gmm_fit(&x, 1, 1).unwrap();
        assert!(fit.assignment.labels.iter().all(|&l| l == 1));
        let Diagnostics::Gmm {
            log_likelihood_trace,
            ..
        } = &fit.assignment.diagnostics
        else {
            panic!()
        };
        // closed form: LL of the MLE diagonal gaussian
        let mean = [3.0, 2.0];
        let var = [8.0 / 3.0, 8.0 / 3.0];
        let mut expect = 0.0;
        for (a, b) in &points {
            let row = [*a, *b];
            for d in 0..2 {
                let diff = row[d] - mean[d];
                expect +=
                    -0.5 * ((2.0 * std::f64::consts::PI * var[d]).ln() + diff * diff / var[d]);
            }
        }
        assert!((log_likelihood_trace.last().unwrap() - expect).abs() < 1e-6);
    }

    #[test]
    fn log_likelihood_nondecreasing() {
        let points: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let t = i as f64;
                ((t * 0.7).sin() * 3.0, (t * 1.3).cos() * 2.0)
            })
            .collect();
        let x = scaled_2d(&points);
        let fit = gmm_fit(&x, 3, 40).unwrap();
        let Diagnostics::Gmm {
            log_likelihood_trace,
            aic,
            bic,
            ..
        } = &fit.assignment.diagnostics
        else {
            panic!()
        };
        for w in log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        // p = k(2l+1)-1 with k=3, l=2
        let p = 14.0;
        let ll = log_likelihood_trace.last().unwrap();
        assert!((aic - (2.0 * p - 2.0 * ll)).abs() < 1e-9);
        assert!((bic - (p * 12f64.ln() - 2.0 * ll)).abs() < 1e-9);
    }

    #[test]
    fn responsibilities_sum_to_one() {
        let points: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, (i % 3) as f64)).collect();
        let fit = gmm_fit(&scaled_2d(&points), 2, 5).unwrap();
        for r in &fit.responsibilities {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
