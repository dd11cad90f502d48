//! Agglomerative clustering with average linkage (UPGMA). The merge tree is
//! retained for dendrogram export; cutting at k replays the first n-k
//! merges. Cluster ids follow the usual convention: singletons are 0..n-1,
//! merged clusters number on from n.

use crate::error::{Error, Result};

use super::{canonical_relabel, Diagnostics, DistanceMatrix, ModelAssignment, ModelId};

/// Full UPGMA merge sequence: (cluster_a, cluster_b, height, new_id) with
/// a < b. Heights are the average inter-cluster distances at merge time and
/// are nondecreasing for this linkage. Ties break on the smallest (a, b).
pub fn upgma_merges(d: &DistanceMatrix) -> Vec<(usize, usize, f64, usize)> {
    let n = d.len();
    // active clusters: (id, members, size); average distances maintained via
    // the Lance-Williams update for UPGMA
    let mut ids: Vec<usize> = (0..n).collect();
    let mut sizes: Vec<usize> = vec![1; n];
    let mut active: Vec<bool> = vec![true; n];
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| d.get(i, j)).collect())
        .collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut next_id = n;

    for _ in 1..n {
        // find the closest active pair; ties on (id_a, id_b)
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..dist.len() {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..dist.len() {
                if !active[j] {
                    continue;
                }
                let sorted_pair = |a: usize, b: usize| {
                    if ids[a] < ids[b] {
                        (ids[a], ids[b])
                    } else {
                        (ids[b], ids[a])
                    }
                };
                let candidate = (dist[i][j], i, j);
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => {
                        candidate.0 < bd
                            || (candidate.0 == bd && sorted_pair(i, j) < sorted_pair(bi, bj))
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
        let (height, i, j) = best.expect("at least two active clusters");
        let (id_a, id_b) = if ids[i] < ids[j] {
            (ids[i], ids[j])
        } else {
            (ids[j], ids[i])
        };
        merges.push((id_a, id_b, height, next_id));

        // merge j into i; the merged cluster occupies slot i
        let (si, sj) = (sizes[i] as f64, sizes[j] as f64);
        for t in 0..dist.len() {
            if t == i || t == j || !active[t] {
                continue;
            }
            let updated = (si * dist[i][t] + sj * dist[j][t]) / (si + sj);
            dist[i][t] = updated;
            dist[t][i] = updated;
        }
        sizes[i] += sizes[j];
        active[j] = false;
        ids[i] = next_id;
        next_id += 1;
    }
    merges
}

/// Cuts the merge sequence to exactly k clusters.
pub fn cut_merges(merges: &[(usize, usize, f64, usize)], n: usize, k: usize) -> Vec<usize> {
    // union-find over cluster ids
    let total = n + merges.len();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b, _, new_id) in merges.iter().take(n - k) {
        let ra = find(&mut parent, *a);
        let rb = find(&mut parent, *b);
        parent[ra] = *new_id;
        parent[rb] = *new_id;
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

pub fn hierarchical(d: &DistanceMatrix, k: usize) -> Result<ModelAssignment> {
    let n = d.len();
    if k == 0 || k > n {
        return Err(Error::Numeric(format!(
            "hierarchical: k={k} outside 1..={n}"
        )));
    }
    let merges = upgma_merges(d);
    let raw = cut_merges(&merges, n, k);
    let (labels, actual_k) = canonical_relabel(&raw);
    debug_assert_eq!(actual_k, k);
    Ok(ModelAssignment {
        model_id: ModelId::Hierarchical,
        k,
        labels,
        diagnostics: Diagnostics::Hierarchical { merges },
        seed: 0,
    })
}

pub fn merges_to_text(merges: &[(usize, usize, f64, usize)]) -> String {
    let mut out = String::from("cluster_a\tcluster_b\theight\tnew_id\n");
    for (a, b, h, id) in merges {
        out.push_str(&format!("{a}\t{b}\t{}\t{id}\n", crate::textio::fmt_f64(*h)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::testutil::euclid_1d;

    #[test]
    fn two_blob_cut() {
        let d = euclid_1d(&[0.0, 1.0, 9.0, 10.0]);
        let a = hierarchical(&d, 2).unwrap();
        assert_eq!(a.labels, vec![1, 1, 2, 2]);
    }

    #[test]
    fn merge_simulation_by_hand() {
        // {0,1,9,10}: merge 0-1 at height 1, merge 9-10 at height 1,
        // then the two pairs at average distance (8+9+9+10)/4 = 9
        let d = euclid_1d(&[0.0, 1.0, 9.0, 10.0]);
        let merges = upgma_merges(&d);
        assert_eq!(merges.len(), 3);
        assert_eq!((merges[0].0, merges[0].1, merges[0].3), (0, 1, 4));
        assert_eq!(merges[0].2, 1.0);
        assert_eq!((merges[1].0, merges[1].1, merges[1].3), (2, 3, 5));
        assert_eq!(merges[1].2, 1.0);
        assert_eq!((merges[2].0, merges[2].1, merges[2].3), (4, 5, 6));
        assert_eq!(merges[2].2, 9.0);
    }

    #[test]
    fn heights_nondecreasing() {
        let d = euclid_1d(&[3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.3, 7.7]);
        let merges = upgma_merges(&d);
        for w in merges.windows(2) {
            assert!(w[1].2 >= w[0].2 - 1e-12);
        }
    }

    #[test]
    fn extreme_cuts_and_refinement() {
        let d = euclid_1d(&[3.0, 1.0, 4.0, 1.5, 9.0]);
        let n = d.len();
        let all = hierarchical(&d, 1).unwrap();
        assert!(all.labels.iter().all(|&l| l == 1));
        let singletons = hierarchical(&d, n).unwrap();
        let mut distinct = singletons.labels.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), n);
        // k+1 refines k: points together at k+1 stay together at k
        for k in 1..n {
            let coarse = hierarchical(&d, k).unwrap().labels;
            let fine = hierarchical(&d, k + 1).unwrap().labels;
            for i in 0..n {
                for j in 0..n {
                    if fine[i] == fine[j] {
                        assert_eq!(coarse[i], coarse[j]);
                    }
                }
            }
        }
    }
}
