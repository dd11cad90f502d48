//! Acceptance suite: one test per criterion, each validated against an
//! independent oracle or the bundled hand-checked fixtures, with the stated
//! tolerances pinned in the asserts. Runs fully offline.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion pass lines.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use campaign_lens::catalog::{catalog_default, FeatureId, FeatureKind};
use campaign_lens::cluster::gmm::gmm;
use campaign_lens::cluster::gower::gower_distance;
use campaign_lens::cluster::hierarchical::{hierarchical, upgma_merges};
use campaign_lens::cluster::kmeans::kmeans;
use campaign_lens::cluster::kmedoids::{kmedoids, total_cost};
use campaign_lens::cluster::validation::{silhouette, silhouette_samples};
use campaign_lens::cluster::{
    Diagnostics, DistanceMatrix, DistanceMetric, ModelAssignment, ModelId,
};
use campaign_lens::config::ConfigBundle;
use campaign_lens::consensus::{align_and_vote, vote, ConsensusResult};
use campaign_lens::dataset::Dataset;
use campaign_lens::domain::PublicSuffixList;
use campaign_lens::explain::{
    brute_force_shap, shap_values, train_surrogate, Hyperparams, SurrogateMetrics,
};
use campaign_lens::featurize::{featurize_all, FetchMode};
use campaign_lens::ingest::{load_domains, IngestFilter};
use campaign_lens::intel::{classify_intel, load_intel, IntelRecord, Verdict};
use campaign_lens::matrix::FeatureMatrix;
use campaign_lens::pipeline::{run_all, RunConfig};
use campaign_lens::select::{
    pearson_matrix, prune_correlated, standardize, ScalePolicy, ScaledMatrix, SelectionResult,
};
use campaign_lens::textio;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

fn corpus_dataset() -> Dataset {
    let filter = IngestFilter::new(
        vec!["ukraine".into(), "ukrainian".into()],
        ("2022-02-25".parse().unwrap(), "2022-07-25".parse().unwrap()),
    )
    .unwrap();
    load_domains(
        &corpus_dir().join("domains.tsv"),
        &filter,
        PublicSuffixList::bundled(),
    )
    .unwrap()
}

/// Ground-truth grouping the corpus was constructed around.
fn corpus_truth(ds: &Dataset) -> Vec<usize> {
    let group_b: BTreeSet<&str> = [
        "ukraine-donate.xyz",
        "help-ukraine-24.live",
        "stand4ukraine.pp.ua",
        "ukraine-war-fund.top",
        "free-ukraine-2022.site",
        "xn--ukraine-6of.live",
        "ukraine2help.icu",
    ]
    .into_iter()
    .collect();
    let group_c: BTreeSet<&str> = [
        "ukrainenewsdaily.com",
        "ukrainetodayhub.net",
        "ukrainianvoices.org",
        "voicesforukraine.info",
        "ukrainesolidarity.eu",
        "ukrainefreedomwatch.me",
    ]
    .into_iter()
    .collect();
    ds.records()
        .iter()
        .map(|r| {
            if group_b.contains(r.domain.raw()) {
                2
            } else if group_c.contains(r.domain.raw()) {
                3
            } else {
                1
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// criterion 1: feature extraction reproduces the hand-verified golden matrix
// ---------------------------------------------------------------------------
#[test]
fn criterion_1_feature_extraction_golden() {
    let started = Instant::now();
    let ds = corpus_dataset();
    assert_eq!(ds.len(), 20);
    let cfg = ConfigBundle::default();
    let (matrix, provenance) = featurize_all(
        &ds,
        &cfg,
        &FetchMode::Fixture(corpus_dir().join("sites")),
        PublicSuffixList::bundled(),
    )
    .unwrap();
    let golden = FeatureMatrix::read(&corpus_dir().join("golden_matrix.tsv")).unwrap();

    assert_eq!(matrix.domains, golden.domains);
    assert_eq!(matrix.n_rows(), 20);
    assert_eq!(matrix.n_cols(), 34);
    for r in 0..20 {
        for c in 0..34 {
            // bit-for-bit equality
            assert_eq!(
                matrix.value(r, c).to_bits(),
                golden.value(r, c).to_bits(),
                "cell ({}, f{}) differs: {} vs golden {}",
                matrix.domains[r],
                c + 1,
                matrix.value(r, c),
                golden.value(r, c)
            );
            assert_eq!(matrix.is_masked(r, c), golden.is_masked(r, c));
        }
    }
    // every feature f1..f34 has at least one nonzero instance
    for c in 0..34 {
        assert!(
            (0..20).any(|r| matrix.value(r, c) != 0.0),
            "feature f{} has no nonzero instance",
            c + 1
        );
    }
    assert!(provenance.iter().all(|p| !p.masked));
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!(
        "[PASS] criterion 1: golden 20x34 matrix bit-for-bit, all features covered ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// criterion 2: pearson against a brute-force oracle; deterministic pruning
// ---------------------------------------------------------------------------

/// Independent two-pass Pearson: explicit mean pass, then explicit
/// covariance/variance pass.
fn pearson_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mut mean_x = 0.0;
    let mut mean_y = 0.0;
    for i in 0..xs.len() {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= n;
    mean_y /= n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..xs.len() {
        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
        syy += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> FeatureMatrix {
    let catalog = catalog_default();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            catalog
                .entries()
                .iter()
                .map(|e| match e.kind {
                    FeatureKind::Binary => rng.gen_range(0..2) as f64,
                    FeatureKind::Count => rng.gen_range(0..25) as f64,
                    FeatureKind::Ratio => (rng.gen_range(0..=100) as f64) / 100.0,
                    FeatureKind::Score => rng.gen_range(-50.0..300.0),
                })
                .collect()
        })
        .collect();
    let mask = vec![vec![false; catalog.len()]; n];
    let domains = (0..n).map(|i| format!("site{i}.com")).collect();
    FeatureMatrix::new(catalog, domains, rows, mask).unwrap()
}

#[test]
fn criterion_2_pearson_and_selection() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for case in 0..100 {
        let n = rng.gen_range(3..=50);
        let m = random_matrix(&mut rng, n);
        let corr = pearson_matrix(&m).unwrap();
        for i in 0..34 {
            for j in 0..34 {
                let xs: Vec<f64> = (0..n).map(|r| m.value(r, i)).collect();
                let ys: Vec<f64> = (0..n).map(|r| m.value(r, j)).collect();
                let expect = if i == j {
                    1.0
                } else {
                    pearson_oracle(&xs, &ys)
                };
                assert!(
                    (corr.value(i, j) - expect).abs() <= 1e-9,
                    "case {case} corr(f{},f{}): {} vs oracle {expect}",
                    i + 1,
                    j + 1,
                    corr.value(i, j)
                );
            }
        }
    }

    // duplicated columns: the later one is always dropped
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let n = rng.gen_range(4..=20);
        let catalog = catalog_default();
        let mut rows: Vec<Vec<f64>> = (0..n).map(|_| vec![0.0; 34]).collect();
        for (r, row) in rows.iter_mut().enumerate() {
            let v = (r % 7) as f64 + 1.0;
            row[0] = v; // f1
            row[2] = v; // f3 duplicates f1
            row[3] = (r % 3) as f64;
        }
        let m = FeatureMatrix::new(
            catalog,
            (0..n).map(|i| format!("s{i}.com")).collect(),
            rows,
            vec![vec![false; 34]; n],
        )
        .unwrap();
        let corr = pearson_matrix(&m).unwrap();
        let sel = prune_correlated(&corr, 0.6).unwrap();
        assert!(sel.kept.contains(&FeatureId(1)));
        assert!(!sel.kept.contains(&FeatureId(3)));
        assert!(sel.dropped.iter().any(|(id, partner, c)| {
            *id == FeatureId(3) && *partner == FeatureId(1) && (c - 1.0).abs() < 1e-12
        }));

        // pruning is idempotent: every surviving pair is under the threshold
        for (a, &i) in sel.kept.iter().enumerate() {
            for &j in sel.kept.iter().skip(a + 1) {
                assert!(corr.value(i.index(), j.index()).abs() <= 0.6);
            }
        }
    }
    println!("[PASS] criterion 2: pearson matches the brute-force oracle (1e-9, 100 cases); duplicate columns drop deterministically; pruning idempotent");
}

// ---------------------------------------------------------------------------
// criterion 3: exhaustive clustering oracles at n <= 8
// ---------------------------------------------------------------------------

fn scaled_from_points(points: &[Vec<f64>]) -> ScaledMatrix {
    ScaledMatrix {
        ids: (1..=points[0].len()).map(|i| FeatureId(i as u8)).collect(),
        domains: (0..points.len()).map(|i| format!("p{i}")).collect(),
        values: points.to_vec(),
        policy: ScalePolicy::None,
        moments: vec![(0.0, 1.0); points[0].len()],
    }
}

fn euclid_matrix(points: &[Vec<f64>]) -> DistanceMatrix {
    let n = points.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            values[i * n + j] = d;
        }
    }
    DistanceMatrix::from_values(DistanceMetric::EuclideanScaled, n, values).unwrap()
}

/// Enumerates all partitions of n points into exactly k nonempty clusters.
fn for_each_partition(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn recurse(
        labels: &mut Vec<usize>,
        used: usize,
        n: usize,
        k: usize,
        f: &mut impl FnMut(&[usize]),
    ) {
        if labels.len() == n {
            if used == k {
                f(labels);
            }
            return;
        }
        for next in 0..used.min(k) {
            labels.push(next);
            recurse(labels, used, n, k, f);
            labels.pop();
        }
        if used < k {
            labels.push(used);
            recurse(labels, used + 1, n, k, f);
            labels.pop();
        }
    }
    recurse(&mut Vec::new(), 0, n, k, f);
}

fn partition_sse(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for d in 0..dim {
            sums[l][d] += p[d];
        }
    }
    let mut sse = 0.0;
    for (p, &l) in points.iter().zip(labels) {
        for d in 0..dim {
            let c = sums[l][d] / counts[l] as f64;
            sse += (p[d] - c) * (p[d] - c);
        }
    }
    sse
}

/// Brute-force UPGMA: recompute every cluster-pair average from raw
/// pairwise distances at each step.
fn upgma_oracle(d: &DistanceMatrix) -> Vec<(usize, usize, f64, usize)> {
    let n = d.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    let mut next_id = n;
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let mut total = 0.0;
                for &a in &clusters[i].1 {
                    for &b in &clusters[j].1 {
                        total += d.get(a, b);
                    }
                }
                let avg = total / (clusters[i].1.len() * clusters[j].1.len()) as f64;
                let ids = if clusters[i].0 < clusters[j].0 {
                    (clusters[i].0, clusters[j].0)
                } else {
                    (clusters[j].0, clusters[i].0)
                };
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => {
                        let bids = if clusters[bi].0 < clusters[bj].0 {
                            (clusters[bi].0, clusters[bj].0)
                        } else {
                            (clusters[bj].0, clusters[bi].0)
                        };
                        avg < bd || (avg == bd && ids < bids)
                    }
                };
                if better {
                    best = Some((avg, i, j));
                }
            }
        }
        let (height, i, j) = best.unwrap();
        let (lo, hi) = (i.min(j), i.max(j));
        let (id_b, members_b) = clusters.remove(hi);
        let (id_a, members_a) = clusters.remove(lo);
        let (id_a, id_b) = if id_a < id_b {
            (id_a, id_b)
        } else {
            (id_b, id_a)
        };
        merges.push((id_a, id_b, height, next_id));
        let mut members = members_a;
        members.extend(members_b);
        clusters.push((next_id, members));
        next_id += 1;
    }
    merges
}

#[test]
fn criterion_3_clustering_oracles() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(40);

    // k-means global optimum over all k-partitions, 25 instances
    for case in 0..25 {
        let n = rng.gen_range(4..=8);
        let dims = if case % 2 == 0 { 1 } else { 2 };
        let k = rng.gen_range(2..=3.min(n));
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dims).map(|_| rng.gen_range(-10.0..10.0)).collect())
            .collect();
        let mut best = f64::INFINITY;
        for_each_partition(n, k, &mut |labels| {
            best = best.min(partition_sse(&points, labels, k));
        });
        let x = scaled_from_points(&points);
        let a = kmeans(&x, k, 40 + case as u64).unwrap();
        let Diagnostics::KMeans { inertia_trace, .. } = &a.diagnostics else {
            panic!()
        };
        let sse = *inertia_trace.last().unwrap();
        assert!(
            (sse - best).abs() <= 1e-9,
            "case {case}: kmeans SSE {sse} vs global optimum {best}"
        );
    }

    // k-medoids cost equals exhaustive medoid-set search
    for case in 0..25 {
        let n = rng.gen_range(4..=8);
        let k = rng.gen_range(2..=3.min(n - 1));
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)])
            .collect();
        let d = euclid_matrix(&points);
        let mut best = f64::INFINITY;
        let mut medoids = vec![0usize; k];
        fn search(
            d: &DistanceMatrix,
            medoids: &mut Vec<usize>,
            pos: usize,
            start: usize,
            k: usize,
            best: &mut f64,
        ) {
            if pos == k {
                *best = best.min(total_cost(d, medoids));
                return;
            }
            for m in start..d.len() {
                medoids[pos] = m;
                search(d, medoids, pos + 1, m + 1, k, best);
            }
        }
        search(&d, &mut medoids, 0, 0, k, &mut best);
        let a = kmedoids(&d, k, 1).unwrap();
        let Diagnostics::KMedoids {
            total_dissimilarity,
            ..
        } = &a.diagnostics
        else {
            panic!()
        };
        assert!(
            (total_dissimilarity - best).abs() <= 1e-9,
            "case {case}: PAM cost {total_dissimilarity} vs exhaustive {best}"
        );
    }

    // hierarchical merge sequence matches the brute-force UPGMA simulator
    for case in 0..25 {
        let n = rng.gen_range(3..=8);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)])
            .collect();
        let d = euclid_matrix(&points);
        let ours = upgma_merges(&d);
        let oracle = upgma_oracle(&d);
        assert_eq!(ours.len(), oracle.len());
        for (step, (a, b)) in ours.iter().zip(&oracle).enumerate() {
            assert_eq!((a.0, a.1, a.3), (b.0, b.1, b.3), "case {case} step {step}");
            assert!(
                (a.2 - b.2).abs() <= 1e-9,
                "case {case} step {step}: height {} vs {}",
                a.2,
                b.2
            );
        }
    }

    // GMM log-likelihood nondecreasing on 50 random instances
    for case in 0..50 {
        let n = rng.gen_range(4..=8);
        let k = rng.gen_range(2..=3.min(n - 1));
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
            .collect();
        let x = scaled_from_points(&points);
        let a = gmm(&x, k, 40 + case as u64).unwrap();
        let Diagnostics::Gmm {
            log_likelihood_trace,
            ..
        } = &a.diagnostics
        else {
            panic!()
        };
        for (step, w) in log_likelihood_trace.windows(2).enumerate() {
            assert!(
                w[1] >= w[0] - 1e-9,
                "case {case} step {step}: LL decreased {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!("[PASS] criterion 3: kmeans/kmedoids match exhaustive optima, UPGMA matches the simulator, GMM LL monotone ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// criterion 4: silhouette against the definitional oracle
// ---------------------------------------------------------------------------

/// O(n^2) silhouette straight from the definition.
fn silhouette_oracle(labels: &[usize], d: &DistanceMatrix) -> f64 {
    let n = labels.len();
    let k = *labels.iter().max().unwrap();
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        let own_size = (0..n).filter(|&j| labels[j] == own).count();
        if own_size == 1 {
            continue;
        }
        let a = (0..n)
            .filter(|&j| j != i && labels[j] == own)
            .map(|j| d.get(i, j))
            .sum::<f64>()
            / (own_size - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 1..=k {
            if c == own {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
            let mean = members.iter().map(|&j| d.get(i, j)).sum::<f64>() / members.len() as f64;
            b = b.min(mean);
        }
        if a.max(b) > 0.0 {
            total += (b - a) / a.max(b);
        }
    }
    total / n as f64
}

#[test]
fn criterion_4_silhouette_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for case in 0..100 {
        let n = rng.gen_range(5..=40);
        let k = rng.gen_range(2..=5.min(n - 1));
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)])
            .collect();
        // random labels covering all k clusters
        let mut labels: Vec<usize> = (0..n).map(|i| i % k + 1).collect();
        for i in 0..n {
            let j = rng.gen_range(0..n);
            labels.swap(i, j);
        }
        let d = euclid_matrix(&points);
        let ours = silhouette(&labels, &d).unwrap();
        let oracle = silhouette_oracle(&labels, &d);
        assert!(
            (ours - oracle).abs() <= 1e-9,
            "case {case}: {ours} vs oracle {oracle}"
        );
    }

    // {0,1,9,10} with clusters {{0,1},{9,10}}: the boundary points score
    // exactly 1 - 1/9.5 (a=1, b=(9+10)/2); the inner points score 1 - 1/8.5,
    // and the mean matches the definitional oracle.
    let d = euclid_matrix(&[vec![0.0], vec![1.0], vec![9.0], vec![10.0]]);
    let labels = vec![1, 1, 2, 2];
    let samples = silhouette_samples(&labels, &d).unwrap();
    assert!((samples[0] - (1.0 - 1.0 / 9.5)).abs() <= 1e-12);
    assert!((samples[3] - (1.0 - 1.0 / 9.5)).abs() <= 1e-12);
    assert!((samples[1] - (1.0 - 1.0 / 8.5)).abs() <= 1e-12);
    assert!((samples[2] - (1.0 - 1.0 / 8.5)).abs() <= 1e-12);
    let mean = silhouette(&labels, &d).unwrap();
    assert!((mean - silhouette_oracle(&labels, &d)).abs() <= 1e-12);
    println!("[PASS] criterion 4: silhouette equals the definitional oracle (1e-9, 100 cases); {{0,1,9,10}} boundary value equals 1-1/9.5 (1e-12)");
}

// ---------------------------------------------------------------------------
// criterion 5: consensus permutation invariance and seeded ties
// ---------------------------------------------------------------------------

fn noisy_assignment(
    model_id: ModelId,
    base: &[usize],
    k: usize,
    noise: usize,
    rng: &mut ChaCha8Rng,
) -> ModelAssignment {
    let mut labels = base.to_vec();
    for _ in 0..noise {
        let i = rng.gen_range(0..labels.len());
        labels[i] = rng.gen_range(1..=k);
    }
    ModelAssignment {
        model_id,
        k,
        labels,
        diagnostics: Diagnostics::Hierarchical { merges: vec![] },
        seed: 0,
    }
}

fn permuted(assignment: &ModelAssignment, perm: &[usize]) -> ModelAssignment {
    let mut out = assignment.clone();
    out.labels = assignment.labels.iter().map(|&l| perm[l - 1]).collect();
    out
}

#[test]
fn criterion_5_consensus_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let k = 3;
    let n = 30;
    for case in 0..100 {
        let base: Vec<usize> = (0..n).map(|i| i % k + 1).collect();
        let assignments: Vec<ModelAssignment> = ModelId::ALL
            .iter()
            .map(|&m| noisy_assignment(m, &base, k, 4, &mut rng))
            .collect();
        let (_, votes, result) = align_and_vote(&assignments, ModelId::KMeans, 40).unwrap();
        for row in &votes.votes {
            assert_eq!(row.iter().sum::<usize>(), 4, "vote row sums to m");
        }
        // relabel one non-reference model with a random permutation
        let target = 1 + (case % 3);
        let mut perm: Vec<usize> = (1..=k).collect();
        for i in (1..k).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let mut permuted_assignments = assignments.clone();
        permuted_assignments[target] = permuted(&assignments[target], &perm);
        let (_, votes2, result2) =
            align_and_vote(&permuted_assignments, ModelId::KMeans, 40).unwrap();
        assert_eq!(result.final_labels, result2.final_labels, "case {case}");
        assert_eq!(result.tie_rows, result2.tie_rows, "case {case}");
        assert_eq!(votes.votes, votes2.votes, "case {case}");
    }

    // seeded tie-break reproduces exactly
    let aligned = vec![
        (ModelId::KMeans, vec![1usize]),
        (ModelId::KMedoids, vec![1]),
        (ModelId::Hierarchical, vec![3]),
        (ModelId::Gmm, vec![3]),
    ];
    let (_, first) = vote(&aligned, 3, 40).unwrap();
    let (_, second) = vote(&aligned, 3, 40).unwrap();
    assert_eq!(first.tie_rows, vec![0]);
    assert_eq!(first, second);
    assert!(first.final_labels[0] == 1 || first.final_labels[0] == 3);
    println!("[PASS] criterion 5: vote invariant under model relabeling (100 cases); row sums = m; seeded ties reproduce");
}

// ---------------------------------------------------------------------------
// criterion 6: surrogate quality, local accuracy, exact SHAP vs brute force
// ---------------------------------------------------------------------------

fn three_blob_matrix(n_per: usize, seed: u64) -> (FeatureMatrix, ConsensusResult, SelectionResult) {
    let catalog = catalog_default();
    let l = catalog.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    // blob centers in the f1/f4 plane plus mild noise in f20
    let centers = [(5.0, 40.0), (25.0, 20.0), (45.0, 42.0)];
    for (class, &(cx, cy)) in centers.iter().enumerate() {
        for _ in 0..n_per {
            let mut row = vec![0.0; l];
            row[0] = (cx + rng.gen_range(0..7) as f64).round();
            row[3] = (cy + rng.gen_range(0..7) as f64).round();
            row[19] = rng.gen_range(0..30) as f64;
            rows.push(row);
            labels.push(class + 1);
        }
    }
    let n = rows.len();
    let matrix = FeatureMatrix::new(
        catalog,
        (0..n).map(|i| format!("s{i}.com")).collect(),
        rows,
        vec![vec![false; l]; n],
    )
    .unwrap();
    let consensus = ConsensusResult {
        final_labels: labels,
        tie_rows: vec![],
        seed,
    };
    let selection = SelectionResult {
        kept: vec![FeatureId(1), FeatureId(4), FeatureId(20)],
        dropped: vec![],
    };
    (matrix, consensus, selection)
}

#[test]
fn criterion_6_surrogate_and_shap() {
    let started = Instant::now();
    // n = 300, the paper's hyperparameters
    let (matrix, consensus, selection) = three_blob_matrix(100, 40);
    let hp = Hyperparams::default();
    assert_eq!(
        (
            hp.max_depth,
            hp.rounds,
            hp.learning_rate,
            hp.min_child_weight,
            hp.gamma
        ),
        (2, 200, 0.25, 3.0, 0.5)
    );
    let outcome = train_surrogate(&matrix, &selection, &consensus, &hp, 40).unwrap();
    assert!(
        outcome.metrics.accuracy >= 0.95,
        "held-out accuracy {}",
        outcome.metrics.accuracy
    );
    // metrics are consistent with the confusion matrix
    let recomputed = SurrogateMetrics::from_confusion(
        outcome.metrics.confusion.clone(),
        outcome.train_indices.len(),
    );
    assert_eq!(recomputed, outcome.metrics);

    // local accuracy on every test instance and class
    let cols = selection.kept_indices();
    let x_test: Vec<Vec<f64>> = outcome
        .test_indices
        .iter()
        .map(|&i| cols.iter().map(|&c| matrix.value(i, c)).collect())
        .collect();
    let shap = shap_values(&outcome.model, &x_test).unwrap();
    for (i, row) in x_test.iter().enumerate() {
        let margins = outcome.model.margins(row);
        for c in 0..outcome.model.classes {
            let total: f64 = shap.values[c][i].iter().sum::<f64>() + shap.base[c];
            assert!(
                (total - margins[c]).abs() <= 1e-6,
                "instance {i} class {c}: |sum phi + base - margin| = {}",
                (total - margins[c]).abs()
            );
        }
    }

    // exact SHAP equals brute-force Shapley enumeration on a small model:
    // 8 features, 1 boosting round (3 trees, one per class)
    let (small_matrix, small_consensus, _) = three_blob_matrix(20, 7);
    let small_selection = SelectionResult {
        kept: (1..=8).map(FeatureId).collect(),
        dropped: vec![],
    };
    let small_hp = Hyperparams {
        rounds: 1,
        min_child_weight: 1.0,
        gamma: 0.01,
        ..Hyperparams::default()
    };
    let small = train_surrogate(
        &small_matrix,
        &small_selection,
        &small_consensus,
        &small_hp,
        40,
    )
    .unwrap();
    let small_cols = small_selection.kept_indices();
    let rows: Vec<Vec<f64>> = small
        .test_indices
        .iter()
        .map(|&i| {
            small_cols
                .iter()
                .map(|&c| small_matrix.value(i, c))
                .collect()
        })
        .collect();
    let small_shap = shap_values(&small.model, &rows).unwrap();
    assert_eq!(small.model.trees.len(), 1);
    for (i, row) in rows.iter().enumerate() {
        for c in 0..small.model.classes {
            let trees: Vec<_> = small.model.trees.iter().map(|round| &round[c]).collect();
            let brute = brute_force_shap(&trees, row, 8);
            for f in 0..8 {
                assert!(
                    (small_shap.values[c][i][f] - brute[f]).abs() <= 1e-6,
                    "instance {i} class {c} feature {f}: {} vs brute {}",
                    small_shap.values[c][i][f],
                    brute[f]
                );
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    println!("[PASS] criterion 6: surrogate accuracy >= 0.95, local accuracy <= 1e-6, exact SHAP matches brute force <= 1e-6 ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// criterion 7: intel rule truth table and transition hand counts
// ---------------------------------------------------------------------------
#[test]
fn criterion_7_characterization() {
    // full truth table: 16 flag combinations x risk in {60, 75, 90}
    for bits in 0..16u8 {
        for risk in [60u8, 75, 90] {
            let record = IntelRecord {
                domain: "a.com".into(),
                source: "ipqs".into(),
                stage: campaign_lens::intel::IntelStage::Iqs,
                spamming: bits & 1 != 0,
                malware: bits & 2 != 0,
                phishing: bits & 4 != 0,
                suspicious: bits & 8 != 0,
                parking: false,
                risk_score: risk,
                vt_status: None,
            };
            let expect = if bits != 0 && risk >= 75 {
                Verdict::Malicious
            } else {
                Verdict::Benign
            };
            assert_eq!(
                classify_intel(&record, 75),
                expect,
                "bits={bits} risk={risk}"
            );
        }
    }

    // transition table on the corpus intel against hand counts
    let ds = corpus_dataset();
    let truth = corpus_truth(&ds);
    let consensus = ConsensusResult {
        final_labels: truth,
        tie_rows: vec![],
        seed: 40,
    };
    let records = load_intel(&corpus_dir().join("intel.txt")).unwrap();
    let table = campaign_lens::characterize::transition_table(&consensus, &ds, &records).unwrap();
    // cluster 1 (orgs): no parking; standwithukraine, ukrainesupportfund and
    // artforukraine have IQS-only intel
    let c1 = &table.clusters[0];
    assert_eq!(
        (
            c1.parked_iqs,
            c1.parked_fes,
            c1.parked_to_live,
            c1.live_to_parked,
            c1.parked_both,
            c1.single_stage
        ),
        (0, 0, 0, 0, 0, 3)
    );
    // cluster 2 (throwaways): hand-counted from intel.txt
    let c2 = &table.clusters[1];
    assert_eq!(c2.parked_iqs, 2, "ukraine-donate, free-ukraine");
    assert_eq!(
        c2.parked_fes, 3,
        "ukraine-donate, ukraine-war-fund, xn--ukraine"
    );
    assert_eq!(c2.parked_to_live, 1, "free-ukraine");
    assert_eq!(c2.live_to_parked, 2, "ukraine-war-fund, xn--ukraine");
    assert_eq!(c2.parked_both, 1, "ukraine-donate");
    assert_eq!(c2.single_stage, 1, "stand4ukraine has IQS only");
    // cluster 3 (hubs): both stages, never parked
    let c3 = &table.clusters[2];
    assert_eq!(
        (
            c3.parked_iqs,
            c3.parked_fes,
            c3.parked_to_live,
            c3.live_to_parked,
            c3.parked_both,
            c3.single_stage
        ),
        (0, 0, 0, 0, 0, 0)
    );
    // dataset row equals the column sums
    assert_eq!(table.dataset_row.parked_iqs, 2);
    assert_eq!(table.dataset_row.parked_fes, 3);
    assert_eq!(table.dataset_row.parked_to_live, 1);
    assert_eq!(table.dataset_row.live_to_parked, 2);
    assert_eq!(table.dataset_row.parked_both, 1);
    assert_eq!(table.dataset_row.single_stage, 4);

    // percentage tables recompute from raw counts
    let tables =
        campaign_lens::characterize::cluster_intel_table(&consensus, &ds, &records, 75).unwrap();
    for t in &tables {
        for row in &t.rows {
            let expect = if row.with_intel == 0 {
                0.0
            } else {
                row.malicious as f64 / row.with_intel as f64
            };
            assert_eq!(row.malicious_fraction, expect);
            assert_eq!(row.unknown, row.size - row.with_intel);
        }
    }
    // all 7 throwaway-cluster domains classify malicious
    let ipqs = tables.iter().find(|t| t.source == "ipqs").unwrap();
    assert_eq!(ipqs.rows[1].malicious, 7);
    assert_eq!(ipqs.rows[1].with_intel, 7);
    assert_eq!(ipqs.rows[0].malicious, 0);
    assert_eq!(ipqs.unmatched_domains, vec!["randomshop.net"]);
    println!("[PASS] criterion 7: intel truth table (16 flag combos x 3 risks) exact; transition table equals hand counts; percentages recompute");
}

// ---------------------------------------------------------------------------
// criterion 8: end-to-end reproducibility and automatic k
// ---------------------------------------------------------------------------
#[test]
fn criterion_8_end_to_end() {
    let started = Instant::now();
    let config = RunConfig::from_file(&corpus_dir().join("run_config.txt")).unwrap();
    let psl = PublicSuffixList::bundled();

    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let summary1 = run_all(&config, dir1.path(), psl).unwrap();
    let summary2 = run_all(&config, dir2.path(), psl).unwrap();

    assert_eq!(
        summary1.chosen_k, 3,
        "auto-selected k equals the constructed ground truth"
    );
    assert_eq!(summary2.chosen_k, 3);
    assert_eq!(summary1.dataset_size, 20);

    let digest1 = textio::dir_digest(&summary1.report_dir).unwrap();
    let digest2 = textio::dir_digest(&summary2.report_dir).unwrap();
    assert_eq!(digest1, digest2, "report digests identical across runs");
    // the whole run directory, manifest included, is reproducible
    let all1 = textio::dir_digest(dir1.path()).unwrap();
    let all2 = textio::dir_digest(dir2.path()).unwrap();
    assert_eq!(all1, all2);

    // the consensus partition recovers the constructed groups exactly
    let (_, consensus) = campaign_lens::consensus::consensus_from_text(
        &textio::read_to_string(&dir1.path().join("consensus.tsv")).unwrap(),
        &dir1.path().join("consensus.tsv"),
    )
    .unwrap();
    let ds = corpus_dataset();
    assert_eq!(consensus.final_labels, corpus_truth(&ds));

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(180), "took {elapsed:?}");
    println!("[PASS] criterion 8: run_all reproducible byte-for-byte, auto k = 3 ({elapsed:?})");
}
