//! Data-driven cluster characterization: joining intel verdicts onto the
//! consensus partition, per-cluster structure/TLD/keyword profiles, and the
//! parked-state transition table across the two observation stages.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::catalog::FeatureId;
use crate::consensus::ConsensusResult;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::intel::{classify_intel, IntelRecord, IntelStage, IntelVerdict, Verdict};
use crate::matrix::FeatureMatrix;

/// Page-count histogram buckets over f20.
pub const PAGE_BUCKETS: [(&str, usize, usize); 5] = [
    ("0-1", 0, 1),
    ("2-5", 2, 5),
    ("6-10", 6, 10),
    ("11-20", 11, 20),
    ("21+", 21, usize::MAX),
];

/// Per-cluster, per-source intel tallies. Unknown domains never enter the
/// denominator; they are reported separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntelClusterRow {
    pub cluster: usize,
    pub size: usize,
    pub with_intel: usize,
    pub unknown: usize,
    pub spamming: usize,
    pub malware: usize,
    pub phishing: usize,
    pub suspicious: usize,
    pub parking: usize,
    pub risk_at_threshold: usize,
    pub malicious: usize,
    pub malicious_fraction: f64,
    pub vt_malicious: usize,
    pub vt_suspicious: usize,
    pub vt_clean: usize,
    pub vt_not_found: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntelTable {
    pub source: String,
    pub rows: Vec<IntelClusterRow>,
    /// Intel records whose domain is not in the dataset.
    pub unmatched_domains: Vec<String>,
}

/// Flags counted once per domain (any stage), verdicts folded across records.
pub fn cluster_intel_table(
    consensus: &ConsensusResult,
    dataset: &Dataset,
    records: &[IntelRecord],
    threshold: u8,
) -> Result<Vec<IntelTable>> {
    let n = consensus.final_labels.len();
    if dataset.len() != n {
        return Err(Error::Numeric("consensus/dataset size mismatch".into()));
    }
    let k = consensus.k();
    let row_of: BTreeMap<&str, usize> = dataset
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.domain.raw(), i))
        .collect();

    let mut sources: Vec<String> = records.iter().map(|r| r.source.clone()).collect();
    sources.sort();
    sources.dedup();

    let mut tables = Vec::new();
    for source in sources {
        let mut rows: Vec<IntelClusterRow> = (1..=k)
            .map(|c| IntelClusterRow {
                cluster: c,
                size: consensus.final_labels.iter().filter(|&&l| l == c).count(),
                with_intel: 0,
                unknown: 0,
                spamming: 0,
                malware: 0,
                phishing: 0,
                suspicious: 0,
                parking: 0,
                risk_at_threshold: 0,
                malicious: 0,
                malicious_fraction: 0.0,
                vt_malicious: 0,
                vt_suspicious: 0,
                vt_clean: 0,
                vt_not_found: 0,
            })
            .collect();
        let mut unmatched = Vec::new();
        // fold all stages of one domain into a single tally row
        let mut by_domain: BTreeMap<&str, Vec<&IntelRecord>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.source == source) {
            by_domain.entry(r.domain.as_str()).or_default().push(r);
        }
        for (domain, recs) in by_domain {
            let Some(&row_idx) = row_of.get(domain) else {
                unmatched.push(domain.to_string());
                continue;
            };
            let cluster = consensus.final_labels[row_idx];
            let row = &mut rows[cluster - 1];
            row.with_intel += 1;
            if recs.iter().any(|r| r.spamming) {
                row.spamming += 1;
            }
            if recs.iter().any(|r| r.malware) {
                row.malware += 1;
            }
            if recs.iter().any(|r| r.phishing) {
                row.phishing += 1;
            }
            if recs.iter().any(|r| r.suspicious) {
                row.suspicious += 1;
            }
            if recs.iter().any(|r| r.parking) {
                row.parking += 1;
            }
            if recs.iter().any(|r| r.risk_score >= threshold) {
                row.risk_at_threshold += 1;
            }
            if recs
                .iter()
                .any(|r| classify_intel(r, threshold) == Verdict::Malicious)
            {
                row.malicious += 1;
            }
            for r in &recs {
                match r.vt_status {
                    Some(crate::intel::VtStatus::Malicious) => row.vt_malicious += 1,
                    Some(crate::intel::VtStatus::Suspicious) => row.vt_suspicious += 1,
                    Some(crate::intel::VtStatus::Clean) => row.vt_clean += 1,
                    Some(crate::intel::VtStatus::NotFound) => row.vt_not_found += 1,
                    None => {}
                }
            }
        }
        for row in &mut rows {
            row.unknown = row.size - row.with_intel;
            row.malicious_fraction = if row.with_intel == 0 {
                0.0
            } else {
                row.malicious as f64 / row.with_intel as f64
            };
        }
        tables.push(IntelTable {
            source,
            rows,
            unmatched_domains: unmatched,
        });
    }
    Ok(tables)
}

/// Everything the report prints about one cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterProfile {
    pub cluster: usize,
    pub size: usize,
    pub malicious: usize,
    pub benign: usize,
    pub unknown: usize,
    pub malicious_fraction: f64,
    pub tld_counts: BTreeMap<String, usize>,
    pub cctld_counts: BTreeMap<String, usize>,
    pub page_count_histogram: Vec<(String, usize)>,
    pub single_page_fraction: f64,
    pub landing_size_mean_kb: f64,
    /// CDF over single-paged members: sorted (size_kb, cumulative fraction).
    pub single_page_size_cdf: Vec<(f64, f64)>,
    pub keyword_prevalence: BTreeMap<String, f64>,
    pub monthly_counts: BTreeMap<String, usize>,
    pub indicators: BTreeMap<String, f64>,
}

fn feature_col(id: u8) -> usize {
    FeatureId(id).index()
}

/// Builds one profile per cluster. Percentages always derive from the stored
/// counts; nothing is cached as a percentage.
pub fn build_profiles(
    consensus: &ConsensusResult,
    matrix: &FeatureMatrix,
    dataset: &Dataset,
    verdicts: &[IntelVerdict],
) -> Result<Vec<ClusterProfile>> {
    let n = consensus.final_labels.len();
    if matrix.n_rows() != n || dataset.len() != n {
        return Err(Error::Numeric(
            "consensus, matrix and dataset must cover the same rows".into(),
        ));
    }
    let k = consensus.k();
    let verdict_of: BTreeMap<&str, Verdict> = verdicts
        .iter()
        .map(|v| (v.domain.as_str(), v.verdict))
        .collect();

    let keyword_cols: [(&str, u8); 6] = [
        ("help", 9),
        ("war", 11),
        ("for_to", 12),
        ("four_two", 13),
        ("crypto", 28),
        ("bank", 29),
    ];

    let mut profiles = Vec::with_capacity(k);
    for cluster in 1..=k {
        let members: Vec<usize> = (0..n)
            .filter(|&i| consensus.final_labels[i] == cluster)
            .collect();
        let size = members.len();
        let mf = size as f64;

        let mut malicious = 0;
        let mut benign = 0;
        let mut unknown = 0;
        for &i in &members {
            match verdict_of
                .get(dataset.records()[i].domain.raw())
                .copied()
                .unwrap_or(Verdict::Unknown)
            {
                Verdict::Malicious => malicious += 1,
                Verdict::Benign => benign += 1,
                Verdict::Unknown => unknown += 1,
            }
        }

        let mut tld_counts = BTreeMap::new();
        let mut cctld_counts = BTreeMap::new();
        let mut monthly_counts = BTreeMap::new();
        for &i in &members {
            let record = &dataset.records()[i];
            let suffix = record.domain.public_suffix().to_string();
            *tld_counts.entry(suffix).or_insert(0) += 1;
            let last = record.domain.labels().last().expect("domains have labels");
            if last.len() == 2 {
                *cctld_counts.entry(last.clone()).or_insert(0) += 1;
            }
            let month = record.first_seen.format("%Y-%m").to_string();
            *monthly_counts.entry(month).or_insert(0) += 1;
        }

        let page_col = feature_col(20);
        let size_col = feature_col(18);
        let mut page_count_histogram = Vec::new();
        for (name, lo, hi) in PAGE_BUCKETS {
            let count = members
                .iter()
                .filter(|&&i| {
                    let pages = matrix.value(i, page_col) as usize;
                    pages >= lo && pages <= hi
                })
                .count();
            page_count_histogram.push((name.to_string(), count));
        }
        let single_paged: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&i| matrix.value(i, page_col) <= 1.0)
            .collect();
        let single_page_fraction = if size == 0 {
            0.0
        } else {
            single_paged.len() as f64 / mf
        };
        let landing_size_mean_kb = if size == 0 {
            0.0
        } else {
            members
                .iter()
                .map(|&i| matrix.value(i, size_col))
                .sum::<f64>()
                / mf
        };
        let mut sizes: Vec<f64> = single_paged
            .iter()
            .map(|&i| matrix.value(i, size_col))
            .collect();
        sizes.sort_by(|a, b| a.partial_cmp(b).expect("finite sizes"));
        let single_page_size_cdf: Vec<(f64, f64)> = sizes
            .iter()
            .enumerate()
            .map(|(idx, &s)| (s, (idx + 1) as f64 / sizes.len() as f64))
            .collect();

        let mut keyword_prevalence = BTreeMap::new();
        for (name, fid) in keyword_cols {
            let col = feature_col(fid);
            let hits = members
                .iter()
                .filter(|&&i| matrix.value(i, col) == 1.0)
                .count();
            keyword_prevalence.insert(name.to_string(), hits as f64 / mf);
        }

        // indicator summary: the compromise signals surfaced by the report
        let mean = |fid: u8| -> f64 {
            let col = feature_col(fid);
            members.iter().map(|&i| matrix.value(i, col)).sum::<f64>() / mf
        };
        let mut indicators = BTreeMap::new();
        indicators.insert("cheap_tld_fraction".into(), mean(14));
        indicators.insert("hyphen_count_mean".into(), mean(6));
        indicators.insert(
            "domain_length_mean".into(),
            members
                .iter()
                .map(|&i| dataset.records()[i].domain.lexical_string().len() as f64)
                .sum::<f64>()
                / mf,
        );
        indicators.insert("tld_badness_mean".into(), mean(16));
        indicators.insert("personal_account_marker_fraction".into(), {
            let bank = feature_col(29);
            let card = feature_col(30);
            let crypto = feature_col(28);
            members
                .iter()
                .filter(|&&i| {
                    matrix.value(i, bank) == 1.0
                        || matrix.value(i, card) == 1.0
                        || matrix.value(i, crypto) == 1.0
                })
                .count() as f64
                / mf
        });
        indicators.insert("landing_size_mean_kb".into(), mean(18));
        indicators.insert("page_count_mean".into(), mean(20));
        indicators.insert("event_keyword_fraction".into(), {
            let cols = [
                feature_col(9),
                feature_col(11),
                feature_col(12),
                feature_col(13),
            ];
            members
                .iter()
                .filter(|&&i| cols.iter().any(|&c| matrix.value(i, c) == 1.0))
                .count() as f64
                / mf
        });

        profiles.push(ClusterProfile {
            cluster,
            size,
            malicious,
            benign,
            unknown,
            malicious_fraction: if malicious + benign == 0 {
                0.0
            } else {
                malicious as f64 / (malicious + benign) as f64
            },
            tld_counts,
            cctld_counts,
            page_count_histogram,
            single_page_fraction,
            landing_size_mean_kb,
            single_page_size_cdf,
            keyword_prevalence,
            monthly_counts,
            indicators,
        });
    }
    Ok(profiles)
}

/// Parked-state bookkeeping per cluster plus the whole-dataset row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionRow {
    pub cluster: Option<usize>,
    pub size: usize,
    pub parked_iqs: usize,
    pub parked_fes: usize,
    pub parked_to_live: usize,
    pub live_to_parked: usize,
    pub parked_both: usize,
    /// Domains with only one observed stage: counted in that stage's parked
    /// column but excluded from transition counts.
    pub single_stage: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionTable {
    pub clusters: Vec<TransitionRow>,
    pub dataset_row: TransitionRow,
}

pub fn transition_table(
    consensus: &ConsensusResult,
    dataset: &Dataset,
    records: &[IntelRecord],
) -> Result<TransitionTable> {
    let n = consensus.final_labels.len();
    if dataset.len() != n {
        return Err(Error::Numeric("consensus/dataset size mismatch".into()));
    }
    let k = consensus.k();
    let row_of: BTreeMap<&str, usize> = dataset
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.domain.raw(), i))
        .collect();

    // parked flag per (domain, stage); any record in a stage with parking
    // set marks that stage parked
    let mut stage_state: BTreeMap<&str, (Option<bool>, Option<bool>)> = BTreeMap::new();
    for r in records {
        let Some(_) = row_of.get(r.domain.as_str()) else {
            continue;
        };
        let entry = stage_state.entry(r.domain.as_str()).or_insert((None, None));
        let slot = match r.stage {
            IntelStage::Iqs => &mut entry.0,
            IntelStage::Fes => &mut entry.1,
        };
        *slot = Some(slot.unwrap_or(false) || r.parking);
    }

    let empty_row = |cluster: Option<usize>, size: usize| TransitionRow {
        cluster,
        size,
        parked_iqs: 0,
        parked_fes: 0,
        parked_to_live: 0,
        live_to_parked: 0,
        parked_both: 0,
        single_stage: 0,
    };
    let mut clusters: Vec<TransitionRow> = (1..=k)
        .map(|c| {
            let size = consensus.final_labels.iter().filter(|&&l| l == c).count();
            empty_row(Some(c), size)
        })
        .collect();

    for (domain, (iqs, fes)) in &stage_state {
        let row_idx = row_of[domain];
        let cluster = consensus.final_labels[row_idx];
        let row = &mut clusters[cluster - 1];
        if let Some(true) = iqs {
            row.parked_iqs += 1;
        }
        if let Some(true) = fes {
            row.parked_fes += 1;
        }
        match (iqs, fes) {
            (Some(p_iqs), Some(p_fes)) => match (p_iqs, p_fes) {
                (true, false) => row.parked_to_live += 1,
                (false, true) => row.live_to_parked += 1,
                (true, true) => row.parked_both += 1,
                (false, false) => {}
            },
            _ => row.single_stage += 1,
        }
    }

    let mut dataset_row = empty_row(None, n);
    for row in &clusters {
        dataset_row.parked_iqs += row.parked_iqs;
        dataset_row.parked_fes += row.parked_fes;
        dataset_row.parked_to_live += row.parked_to_live;
        dataset_row.live_to_parked += row.live_to_parked;
        dataset_row.parked_both += row.parked_both;
        dataset_row.single_stage += row.single_stage;
    }
    Ok(TransitionTable {
        clusters,
        dataset_row,
    })
}
