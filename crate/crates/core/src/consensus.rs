//! Consensus over the model partitions: align cluster numberings across
//! models by maximum label overlap (Hungarian assignment on the contingency
//! table), then apply per-instance majority voting with a seeded tie-break.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::{ModelAssignment, ModelId};
use crate::error::{Error, Result};
use crate::textio;

/// Per-model bijection old-label -> reference-label.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMap {
    pub reference: ModelId,
    /// (model, mapping) where mapping[old-1] = reference label.
    pub mappings: Vec<(ModelId, Vec<usize>)>,
}

impl AlignmentMap {
    pub fn apply(&self, assignment: &ModelAssignment) -> Vec<usize> {
        let mapping = self
            .mappings
            .iter()
            .find(|(m, _)| *m == assignment.model_id)
            .map(|(_, map)| map)
            .expect("model present in alignment");
        assignment.labels.iter().map(|&l| mapping[l - 1]).collect()
    }
}

/// Maximum-overlap alignment of every model onto the reference partition.
pub fn align_labels(assignments: &[ModelAssignment], reference: ModelId) -> Result<AlignmentMap> {
    let reference_assignment = assignments
        .iter()
        .find(|a| a.model_id == reference)
        .ok_or_else(|| Error::Numeric(format!("reference model {reference} missing")))?;
    let k = reference_assignment.k;
    let n = reference_assignment.labels.len();
    for a in assignments {
        if a.k != k || a.labels.len() != n {
            return Err(Error::Numeric(format!(
                "{}: expected k={k}, n={n}; got k={}, n={}",
                a.model_id,
                a.k,
                a.labels.len()
            )));
        }
    }
    let mut mappings = Vec::with_capacity(assignments.len());
    for a in assignments {
        if a.model_id == reference {
            mappings.push((a.model_id, (1..=k).collect()));
            continue;
        }
        // contingency[old][ref] = overlap count
        let mut contingency = vec![vec![0usize; k]; k];
        for (&mine, &theirs) in a.labels.iter().zip(&reference_assignment.labels) {
            contingency[mine - 1][theirs - 1] += 1;
        }
        let assignment = hungarian_max(&contingency);
        let mapping: Vec<usize> = assignment.iter().map(|&r| r + 1).collect();
        mappings.push((a.model_id, mapping));
    }
    Ok(AlignmentMap {
        reference,
        mappings,
    })
}

/// Maximum-weight perfect matching on a square nonnegative matrix via the
/// Hungarian algorithm (potentials formulation). Returns column assigned to
/// each row.
pub fn hungarian_max(weights: &[Vec<usize>]) -> Vec<usize> {
    let n = weights.len();
    let max_w = weights
        .iter()
        .flat_map(|row| row.iter())
        .copied()
        .max()
        .unwrap_or(0) as i64;
    // minimize cost = max_w - weight
    let cost: Vec<Vec<i64>> = weights
        .iter()
        .map(|row| row.iter().map(|&w| max_w - w as i64).collect())
        .collect();

    // O(n^3) potentials method; 1-based internal arrays
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[col] = row matched to col
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            result[p[j] - 1] = j - 1;
        }
    }
    result
}

/// The vote matrix: V[i][cluster-1] counts models assigning row i to cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteMatrix {
    pub k: usize,
    pub models: usize,
    pub votes: Vec<Vec<usize>>,
}

/// Final fused partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusResult {
    pub final_labels: Vec<usize>,
    pub tie_rows: Vec<usize>,
    pub seed: u64,
}

impl ConsensusResult {
    pub fn k(&self) -> usize {
        self.final_labels.iter().copied().max().unwrap_or(0)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let k = self.k();
        let mut sizes = vec![0usize; k];
        for &l in &self.final_labels {
            sizes[l - 1] += 1;
        }
        sizes
    }
}

/// Majority voting over aligned assignments. Vote rows always sum to the
/// number of models; argmax ties resolve by a seeded uniform draw among the
/// tied labels and the row is flagged.
pub fn vote(
    aligned: &[(ModelId, Vec<usize>)],
    k: usize,
    seed: u64,
) -> Result<(VoteMatrix, ConsensusResult)> {
    let m = aligned.len();
    if m == 0 {
        return Err(Error::Numeric("vote needs at least one model".into()));
    }
    let n = aligned[0].1.len();
    for (model, labels) in aligned {
        if labels.len() != n {
            return Err(Error::Numeric(format!("{model}: label length mismatch")));
        }
        if labels.iter().any(|&l| l == 0 || l > k) {
            return Err(Error::Numeric(format!("{model}: label outside 1..={k}")));
        }
    }
    let mut votes = vec![vec![0usize; k]; n];
    for (_, labels) in aligned {
        for (i, &l) in labels.iter().enumerate() {
            votes[i][l - 1] += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut final_labels = Vec::with_capacity(n);
    let mut tie_rows = Vec::new();
    for (i, row) in votes.iter().enumerate() {
        let top = *row.iter().max().expect("k >= 1");
        let tied: Vec<usize> = (0..k).filter(|&c| row[c] == top).map(|c| c + 1).collect();
        let label = if tied.len() == 1 {
            tied[0]
        } else {
            tie_rows.push(i);
            tied[rng.gen_range(0..tied.len())]
        };
        final_labels.push(label);
    }
    Ok((
        VoteMatrix {
            k,
            models: m,
            votes,
        },
        ConsensusResult {
            final_labels,
            tie_rows,
            seed,
        },
    ))
}

/// Convenience: align to the reference model, then vote.
pub fn align_and_vote(
    assignments: &[ModelAssignment],
    reference: ModelId,
    seed: u64,
) -> Result<(AlignmentMap, VoteMatrix, ConsensusResult)> {
    let alignment = align_labels(assignments, reference)?;
    let aligned: Vec<(ModelId, Vec<usize>)> = assignments
        .iter()
        .map(|a| (a.model_id, alignment.apply(a)))
        .collect();
    let k = assignments[0].k;
    let (votes, result) = vote(&aligned, k, seed)?;
    Ok((alignment, votes, result))
}

/// Stage-file form: one row per instance with the vote counts.
pub fn consensus_to_text(
    domains: &[String],
    votes: &VoteMatrix,
    result: &ConsensusResult,
) -> String {
    let mut out = String::from("row\tdomain\tvotes\tlabel\ttie\n");
    for i in 0..result.final_labels.len() {
        let vote_str: Vec<String> = votes.votes[i].iter().map(|v| v.to_string()).collect();
        out.push_str(&format!(
            "{i}\t{}\t{}\t{}\t{}\n",
            domains.get(i).map(String::as_str).unwrap_or(""),
            vote_str.join(","),
            result.final_labels[i],
            result.tie_rows.contains(&i) as u8,
        ));
    }
    out
}

pub fn consensus_from_text(text: &str, path: &Path) -> Result<(Vec<String>, ConsensusResult)> {
    let mut domains = Vec::new();
    let mut final_labels = Vec::new();
    let mut tie_rows = Vec::new();
    for (line_no, line) in textio::data_lines(text) {
        let cols = textio::split_row(line);
        if cols[0] == "row" {
            continue;
        }
        if cols.len() != 5 {
            return Err(Error::record(path, line_no, "expected 5 columns"));
        }
        let label: usize = cols[3]
            .parse()
            .map_err(|_| Error::record(path, line_no, format!("bad label {:?}", cols[3])))?;
        if cols[4] == "1" {
            tie_rows.push(final_labels.len());
        }
        domains.push(cols[1].clone());
        final_labels.push(label);
    }
    Ok((
        domains,
        ConsensusResult {
            final_labels,
            tie_rows,
            seed: 0,
        },
    ))
}
