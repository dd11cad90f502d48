//! PAM k-medoids: greedy BUILD initialization followed by steepest-descent
//! SWAP until no single medoid swap lowers the total dissimilarity, then
//! best-of additional seeded random starts (SWAP converges to a 1-swap
//! local optimum from any start; restarts escape poor basins). Runs on any
//! distance matrix; the pipeline feeds it the Gower matrix for robustness
//! on mixed-type features.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{canonical_relabel, Diagnostics, DistanceMatrix, ModelAssignment, ModelId};

const RANDOM_RESTARTS: usize = 9;

pub fn kmedoids(d: &DistanceMatrix, k: usize, seed: u64) -> Result<ModelAssignment> {
    let n = d.len();
    if k == 0 || k > n {
        return Err(Error::Numeric(format!("kmedoids: k={k} outside 1..={n}")));
    }
    let (mut medoids, mut swaps) = swap_to_optimum(d, build(d, k));
    let mut best_cost = total_cost(d, &medoids);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_RESTARTS {
        let mut candidates: Vec<usize> = (0..n).collect();
        candidates.shuffle(&mut rng);
        candidates.truncate(k);
        let (trial, trial_swaps) = swap_to_optimum(d, candidates);
        let cost = total_cost(d, &trial);
        if cost < best_cost - 1e-12 {
            best_cost = cost;
            medoids = trial;
            swaps = trial_swaps;
        }
    }
    medoids.sort();
    let raw: Vec<usize> = (0..n).map(|i| nearest_medoid(d, &medoids, i)).collect();
    let (labels, actual_k) = canonical_relabel(&raw);
    debug_assert_eq!(actual_k, k);
    let total = total_cost(d, &medoids);
    Ok(ModelAssignment {
        model_id: ModelId::KMedoids,
        k,
        labels,
        diagnostics: Diagnostics::KMedoids {
            total_dissimilarity: total,
            swaps,
            medoids,
        },
        seed,
    })
}

/// Steepest-descent SWAP: repeatedly apply the single (medoid, candidate)
/// exchange that lowers total dissimilarity the most, until none improves.
/// Ties keep the lexicographically first improving pair.
fn swap_to_optimum(d: &DistanceMatrix, mut medoids: Vec<usize>) -> (Vec<usize>, usize) {
    let n = d.len();
    let k = medoids.len();
    let mut swaps = 0usize;
    loop {
        let current_cost = total_cost(d, &medoids);
        let mut best: Option<(f64, usize, usize)> = None;
        for m_idx in 0..k {
            for h in 0..n {
                if medoids.contains(&h) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[m_idx] = h;
                let cost = total_cost(d, &trial);
                if cost < current_cost - 1e-12 {
                    let better = match best {
                        Some((best_cost, _, _)) => cost < best_cost - 1e-12,
                        None => true,
                    };
                    if better {
                        best = Some((cost, m_idx, h));
                    }
                }
            }
        }
        match best {
            Some((_, m_idx, h)) => {
                medoids[m_idx] = h;
                swaps += 1;
            }
            None => return (medoids, swaps),
        }
    }
}

/// Greedy BUILD: start from the most central point, then repeatedly add the
/// point that reduces total cost the most. Deterministic; ties break on the
/// lower index.
fn build(d: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = d.len();
    let first = (0..n)
        .min_by(|&a, &b| {
            let ca: f64 = (0..n).map(|j| d.get(a, j)).sum();
            let cb: f64 = (0..n).map(|j| d.get(b, j)).sum();
            ca.partial_cmp(&cb).expect("finite")
        })
        .expect("nonempty");
    let mut medoids = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|i| d.get(i, first)).collect();
    while medoids.len() < k {
        let mut best = (f64::INFINITY, usize::MAX);
        for cand in 0..n {
            if medoids.contains(&cand) {
                continue;
            }
            let cost: f64 = (0..n).map(|i| nearest[i].min(d.get(i, cand))).sum();
            if cost < best.0 - 1e-12 {
                best = (cost, cand);
            }
        }
        let cand = best.1;
        for i in 0..n {
            nearest[i] = nearest[i].min(d.get(i, cand));
        }
        medoids.push(cand);
    }
    medoids
}

fn nearest_medoid(d: &DistanceMatrix, medoids: &[usize], i: usize) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (idx, &m) in medoids.iter().enumerate() {
        let dist = d.get(i, m);
        if dist < best_d {
            best_d = dist;
            best = idx;
        }
    }
    best
}

pub fn total_cost(d: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..d.len())
        .map(|i| {
            medoids
                .iter()
                .map(|&m| d.get(i, m))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::testutil::euclid_1d;

    #[test]
    fn two_blob_medoids() {
        let d = euclid_1d(&[0.0, 1.0, 9.0, 10.0]);
        let a = kmedoids(&d, 2, 40).unwrap();
        let Diagnostics::KMedoids {
            total_dissimilarity,
            medoids,
            ..
        } = &a.diagnostics
        else {
            panic!()
        };
        assert!((total_dissimilarity - 2.0).abs() < 1e-12);
        assert!(medoids[0] < 2 && medoids[1] >= 2);
        assert_eq!(a.labels, vec![1, 1, 2, 2]);
    }

    #[test]
    fn k_equals_n_has_zero_cost() {
        let d = euclid_1d(&[3.0, 1.0, 4.0]);
        let a = kmedoids(&d, 3, 1).unwrap();
        let Diagnostics::KMedoids {
            total_dissimilarity,
            ..
        } = &a.diagnostics
        else {
            panic!()
        };
        assert_eq!(*total_dissimilarity, 0.0);
    }

    #[test]
    fn outlier_does_not_drag_medoid() {
        // mean-based centroid would move toward the gross outlier; the
        // medoid stays on the mass of points
        let d = euclid_1d(&[0.0, 1.0, 2.0, 100.0]);
        let a = kmedoids(&d, 1, 1).unwrap();
        let Diagnostics::KMedoids { medoids, .. } = &a.diagnostics else {
            panic!()
        };
        assert_eq!(medoids, &vec![1]);
    }

    #[test]
    fn locally_optimal_under_single_swaps() {
        let d = euclid_1d(&[3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.3]);
        let a = kmedoids(&d, 3, 1).unwrap();
        let Diagnostics::KMedoids { medoids, .. } = &a.diagnostics else {
            panic!()
        };
        let base = total_cost(&d, medoids);
        for m_idx in 0..medoids.len() {
            for h in 0..d.len() {
                if medoids.contains(&h) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[m_idx] = h;
                assert!(total_cost(&d, &trial) >= base - 1e-12);
            }
        }
    }
}
