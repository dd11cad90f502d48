//! Silhouette-driven k selection with a consensus across models: each model
//! picks the k maximizing its silhouette curve (ties to the smaller k), and
//! the consensus k is the mode of the per-model choices (mode ties to the
//! smaller k). Elbow/AIC/BIC curves ride along for cross-checking.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use crate::error::Result;
use crate::select::ScaledMatrix;
use crate::textio;

use super::gmm::gmm;
use super::hierarchical::hierarchical;
use super::kmeans::kmeans;
use super::kmedoids::kmedoids;
use super::validation::{calinski_harabasz, silhouette};
use super::{Diagnostics, DistanceMatrix, ModelId};

#[derive(Debug, Clone, PartialEq)]
pub struct KSelectionReport {
    /// (model, k, silhouette) for every evaluated pair, in model-then-k order.
    pub silhouette_curves: Vec<(ModelId, usize, f64)>,
    /// (k, calinski-harabasz) for k-means.
    pub ch_curve: Vec<(usize, f64)>,
    /// (k, aic, bic) for the mixture model.
    pub aic_bic_curve: Vec<(usize, f64, f64)>,
    pub chosen: Vec<(ModelId, usize)>,
    pub consensus_k: usize,
}

impl KSelectionReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# consensus_k\t{}\n", self.consensus_k));
        for (model, k) in &self.chosen {
            out.push_str(&format!("# chosen\t{model}\t{k}\n"));
        }
        out.push_str("model\tk\tsilhouette\n");
        for (model, k, s) in &self.silhouette_curves {
            out.push_str(&format!("{model}\t{k}\t{}\n", textio::fmt_f64(*s)));
        }
        out.push_str("# kmeans calinski-harabasz\nk\tch\n");
        for (k, ch) in &self.ch_curve {
            out.push_str(&format!("{k}\t{}\n", textio::fmt_f64(*ch)));
        }
        out.push_str("# gmm information criteria\nk\taic\tbic\n");
        for (k, aic, bic) in &self.aic_bic_curve {
            out.push_str(&format!(
                "{k}\t{}\t{}\n",
                textio::fmt_f64(*aic),
                textio::fmt_f64(*bic)
            ));
        }
        out
    }
}

/// argmax of a silhouette curve; ties go to the smaller k.
fn argmax_k(curve: &[(usize, f64)]) -> usize {
    let mut best_k = curve[0].0;
    let mut best_s = curve[0].1;
    for &(k, s) in &curve[1..] {
        if s > best_s {
            best_s = s;
            best_k = k;
        }
    }
    best_k
}

/// Mode of the per-model choices; ties go to the smaller k.
pub fn consensus_of(chosen: &[(ModelId, usize)]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, k) in chosen {
        *counts.entry(*k).or_insert(0) += 1;
    }
    let max = counts.values().copied().max().expect("nonempty choices");
    counts
        .into_iter()
        .find(|(_, c)| *c == max)
        .map(|(k, _)| k)
        .expect("mode exists")
}

/// Runs every model at every k in range, scoring silhouette against the
/// model's own geometry (euclidean for k-means/GMM, Gower for
/// k-medoids/hierarchical).
pub fn select_k(
    scaled: &ScaledMatrix,
    gower: &DistanceMatrix,
    k_range: RangeInclusive<usize>,
    seed: u64,
) -> Result<KSelectionReport> {
    let euclid = DistanceMatrix::euclidean(scaled);
    let mut silhouette_curves = Vec::new();
    let mut ch_curve = Vec::new();
    let mut aic_bic_curve = Vec::new();
    let mut chosen = Vec::new();

    let n = scaled.n_rows();
    for model in ModelId::ALL {
        let mut curve = Vec::new();
        for k in k_range.clone() {
            if k >= n {
                break; // silhouette needs k < n
            }
            let (labels, extra) = match model {
                ModelId::KMeans => {
                    let a = kmeans(scaled, k, seed)?;
                    ch_curve.push((k, calinski_harabasz(scaled, &a.labels)?));
                    (a.labels, None)
                }
                ModelId::KMedoids => (kmedoids(gower, k, seed)?.labels, None),
                ModelId::Hierarchical => (hierarchical(gower, k)?.labels, None),
                ModelId::Gmm => {
                    let a = gmm(scaled, k, seed)?;
                    let Diagnostics::Gmm { aic, bic, .. } = a.diagnostics else {
                        unreachable!()
                    };
                    (a.labels, Some((aic, bic)))
                }
            };
            if let Some((aic, bic)) = extra {
                aic_bic_curve.push((k, aic, bic));
            }
            let dist = match model {
                ModelId::KMeans | ModelId::Gmm => &euclid,
                ModelId::KMedoids | ModelId::Hierarchical => gower,
            };
            let s = silhouette(&labels, dist)?;
            curve.push((k, s));
            silhouette_curves.push((model, k, s));
        }
        chosen.push((model, argmax_k(&curve)));
    }
    let consensus_k = consensus_of(&chosen);
    Ok(KSelectionReport {
        silhouette_curves,
        ch_curve,
        aic_bic_curve,
        chosen,
        consensus_k,
    })
}
