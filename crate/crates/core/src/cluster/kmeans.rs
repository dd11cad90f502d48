//! Lloyd's k-means with k-means++ seeding and best-of-n restarts. Restarts
//! are standard practice for escaping poor seedings; per-restart seeds derive
//! from the caller's seed so a run is fully reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::select::ScaledMatrix;

use super::{canonical_relabel, euclidean_distance, Diagnostics, ModelAssignment, ModelId};

const MAX_ITERS: usize = 300;
const RESTARTS: usize = 10;

pub fn kmeans(x: &ScaledMatrix, k: usize, seed: u64) -> Result<ModelAssignment> {
    let n = x.n_rows();
    if k == 0 || k > n {
        return Err(Error::Numeric(format!("kmeans: k={k} outside 1..={n}")));
    }
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for restart in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let (labels, trace) = lloyd(x, k, &mut rng);
        let sse = *trace.last().expect("at least one iteration");
        let better = match &best {
            Some((best_sse, _, _)) => sse < best_sse - 1e-12,
            None => true,
        };
        if better {
            best = Some((sse, labels, trace));
        }
    }
    let (_, raw_labels, inertia_trace) = best.expect("restarts ran");
    let (labels, actual_k) = canonical_relabel(&raw_labels);
    debug_assert_eq!(actual_k, k);
    Ok(ModelAssignment {
        model_id: ModelId::KMeans,
        k,
        labels,
        diagnostics: Diagnostics::KMeans {
            inertia_trace,
            restarts: RESTARTS,
        },
        seed,
    })
}

/// One k-means++ seeding followed by Lloyd iterations to an assignment
/// fixpoint. Returns raw labels (0-based) and the SSE trace.
fn lloyd(x: &ScaledMatrix, k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<f64>) {
    let n = x.n_rows();
    let dim = x.n_cols();
    let mut centroids = plusplus_seeding(x, k, rng);
    let mut labels = vec![0usize; n];
    let mut trace = Vec::new();

    for _ in 0..MAX_ITERS {
        // assignment step; ties go to the lower centroid index
        let mut changed = false;
        for (i, row) in x.values.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = euclidean_distance(row, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        // empty clusters re-seed at the point farthest from its centroid
        loop {
            let mut counts = vec![0usize; k];
            for &l in &labels {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let farthest = (0..n)
                .max_by(|&a, &b| {
                    let da = euclidean_distance(&x.values[a], &centroids[labels[a]]);
                    let db = euclidean_distance(&x.values[b], &centroids[labels[b]]);
                    da.partial_cmp(&db).expect("finite distances")
                })
                .expect("nonempty data");
            labels[farthest] = empty;
            centroids[empty] = x.values[farthest].clone();
            changed = true;
        }
        // update step
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, row) in x.values.iter().enumerate() {
            counts[labels[i]] += 1;
            for (d, v) in row.iter().enumerate() {
                sums[labels[i]][d] += v;
            }
        }
        for c in 0..k {
            for d in 0..dim {
                centroids[c][d] = sums[c][d] / counts[c] as f64;
            }
        }
        trace.push(sse(x, &labels, &centroids));
        if !changed {
            break;
        }
    }
    (labels, trace)
}

fn sse(x: &ScaledMatrix, labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    x.values
        .iter()
        .zip(labels)
        .map(|(row, &l)| {
            row.iter()
                .zip(&centroids[l])
                .map(|(v, c)| (v - c) * (v - c))
                .sum::<f64>()
        })
        .sum()
}

/// k-means++: first center uniform, later centers sampled proportional to
/// squared distance from the nearest chosen center.
fn plusplus_seeding(x: &ScaledMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = x.n_rows();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(x.values[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = x
        .values
        .iter()
        .map(|row| {
            let d = euclidean_distance(row, &centroids[0]);
            d * d
        })
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let chosen = if total <= 0.0 {
            // all remaining points coincide with a center
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        };
        centroids.push(x.values[chosen].clone());
        for (i, row) in x.values.iter().enumerate() {
            let d = euclidean_distance(row, centroids.last().expect("just pushed"));
            d2[i] = d2[i].min(d * d);
        }
    }
    centroids
}
