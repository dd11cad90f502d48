//! Report rendering: one machine-readable JSON report embedding config hash
//! and seeds, plus plot-ready tab-separated series per figure analog.

use std::path::Path;

use serde::Serialize;

use crate::characterize::{ClusterProfile, IntelTable, TransitionTable};
use crate::consensus::ConsensusResult;
use crate::error::{Error, Result};
use crate::explain::{ShapSummary, SurrogateMetrics};
use crate::ingest::RegistrationSeries;
use crate::textio;

#[derive(Debug, Clone, Serialize)]
pub struct ExplainSection {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub shap_variant: String,
    /// Top features per cluster: (feature id, mean |phi|, direction).
    pub top_features: Vec<Vec<(String, f64, i8)>>,
}

/// The machine-readable campaign report.
#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub dataset_size: usize,
    pub consensus_k: usize,
    pub cluster_sizes: Vec<usize>,
    pub tie_rows: usize,
    pub profiles: Vec<ClusterProfile>,
    pub intel: Vec<IntelTable>,
    pub transitions: TransitionTable,
    pub explain: Option<ExplainSection>,
    /// The compromise indicators the characterization surfaces, with the
    /// per-cluster statistics backing them.
    pub indicator_names: Vec<String>,
}

pub struct ReportInputs<'a> {
    pub config_hash: String,
    pub seed: u64,
    pub consensus: &'a ConsensusResult,
    pub profiles: &'a [ClusterProfile],
    pub intel: &'a [IntelTable],
    pub transitions: &'a TransitionTable,
    pub trend: &'a RegistrationSeries,
    pub explain: Option<(&'a SurrogateMetrics, &'a ShapSummary)>,
}

pub const INDICATOR_NAMES: [&str; 8] = [
    "cheap_tld_fraction",
    "hyphen_count_mean",
    "domain_length_mean",
    "tld_badness_mean",
    "personal_account_marker_fraction",
    "landing_size_mean_kb",
    "page_count_mean",
    "event_keyword_fraction",
];

/// Writes `report.json` plus the `series/` TSV files into `out_dir`.
/// Deterministic byte-for-byte for fixed inputs: no timestamps, sorted maps,
/// shortest round-trip floats.
pub fn render_report(inputs: &ReportInputs<'_>, out_dir: &Path) -> Result<()> {
    if inputs.profiles.is_empty() {
        return Err(Error::MissingArtifact {
            stage: "characterize".into(),
            what: "cluster profiles".into(),
        });
    }
    let explain = inputs.explain.map(|(metrics, summary)| ExplainSection {
        accuracy: metrics.accuracy,
        macro_precision: metrics.macro_precision,
        macro_recall: metrics.macro_recall,
        macro_f1: metrics.macro_f1,
        shap_variant: "tree_path_dependent".into(),
        top_features: summary
            .per_class
            .iter()
            .map(|ranked| {
                ranked
                    .iter()
                    .take(10)
                    .map(|(id, phi, dir)| (id.to_string(), *phi, *dir))
                    .collect()
            })
            .collect(),
    });
    let report = CampaignReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: inputs.config_hash.clone(),
        seed: inputs.seed,
        dataset_size: inputs.consensus.final_labels.len(),
        consensus_k: inputs.consensus.k(),
        cluster_sizes: inputs.consensus.cluster_sizes(),
        tie_rows: inputs.consensus.tie_rows.len(),
        profiles: inputs.profiles.to_vec(),
        intel: inputs.intel.to_vec(),
        transitions: inputs.transitions.clone(),
        explain,
        indicator_names: INDICATOR_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Numeric(format!("report serialization failed: {e}")))?;
    textio::write_string(&out_dir.join("report.json"), &(json + "\n"))?;

    let series = out_dir.join("series");

    let mut hist = String::from("cluster\tbucket\tcount\n");
    let mut cdf = String::from("cluster\tsize_kb\tcumulative_fraction\n");
    let mut monthly = String::from("cluster\tmonth\tcount\n");
    let mut tld = String::from("cluster\ttld\tcount\n");
    let mut cctld = String::from("cluster\tcctld\tcount\n");
    let mut keywords = String::from("cluster\tkeyword\tfraction\n");
    for p in inputs.profiles {
        for (bucket, count) in &p.page_count_histogram {
            hist.push_str(&format!("C{}\t{bucket}\t{count}\n", p.cluster));
        }
        for (size, frac) in &p.single_page_size_cdf {
            cdf.push_str(&format!(
                "C{}\t{}\t{}\n",
                p.cluster,
                textio::fmt_f64(*size),
                textio::fmt_f64(*frac)
            ));
        }
        for (month, count) in &p.monthly_counts {
            monthly.push_str(&format!("C{}\t{month}\t{count}\n", p.cluster));
        }
        for (suffix, count) in &p.tld_counts {
            tld.push_str(&format!("C{}\t{suffix}\t{count}\n", p.cluster));
        }
        for (cc, count) in &p.cctld_counts {
            cctld.push_str(&format!("C{}\t{cc}\t{count}\n", p.cluster));
        }
        for (kw, frac) in &p.keyword_prevalence {
            keywords.push_str(&format!(
                "C{}\t{kw}\t{}\n",
                p.cluster,
                textio::fmt_f64(*frac)
            ));
        }
    }
    textio::write_string(&series.join("page_count_hist.tsv"), &hist)?;
    textio::write_string(&series.join("landing_size_cdf.tsv"), &cdf)?;
    textio::write_string(&series.join("monthly_creation.tsv"), &monthly)?;
    textio::write_string(&series.join("tld_distribution.tsv"), &tld)?;
    textio::write_string(&series.join("cctld_distribution.tsv"), &cctld)?;
    textio::write_string(&series.join("keyword_prevalence.tsv"), &keywords)?;
    textio::write_string(
        &series.join("registration_trend.tsv"),
        &inputs.trend.to_text(),
    )?;

    let mut transitions = String::from(
        "cluster\tsize\tparked_iqs\tparked_fes\tparked_to_live\tlive_to_parked\tparked_both\tsingle_stage\n",
    );
    let mut push_row = |row: &crate::characterize::TransitionRow| {
        let name = match row.cluster {
            Some(c) => format!("C{c}"),
            None => "W_live".to_string(),
        };
        transitions.push_str(&format!(
            "{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            row.size,
            row.parked_iqs,
            row.parked_fes,
            row.parked_to_live,
            row.live_to_parked,
            row.parked_both,
            row.single_stage
        ));
    };
    for row in &inputs.transitions.clusters {
        push_row(row);
    }
    push_row(&inputs.transitions.dataset_row);
    textio::write_string(&series.join("transitions.tsv"), &transitions)?;

    let mut intel = String::from(
        "source\tcluster\tsize\twith_intel\tunknown\tspamming\tmalware\tphishing\tsuspicious\tparking\trisk_at_threshold\tmalicious\tmalicious_fraction\tvt_malicious\tvt_suspicious\tvt_clean\tvt_not_found\n",
    );
    for table in inputs.intel {
        for row in &table.rows {
            intel.push_str(&format!(
                "{}\tC{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                table.source,
                row.cluster,
                row.size,
                row.with_intel,
                row.unknown,
                row.spamming,
                row.malware,
                row.phishing,
                row.suspicious,
                row.parking,
                row.risk_at_threshold,
                row.malicious,
                textio::fmt_f64(row.malicious_fraction),
                row.vt_malicious,
                row.vt_suspicious,
                row.vt_clean,
                row.vt_not_found
            ));
        }
    }
    textio::write_string(&series.join("intel_flags.tsv"), &intel)?;
    Ok(())
}
