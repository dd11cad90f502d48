//! File-based stage orchestration: every stage reads the previous stage's
//! files and writes its own, so each is independently invocable and a full
//! run is replayable from the manifest.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use crate::cluster::gower::gower_distance;
use crate::cluster::hierarchical::{hierarchical, merges_to_text};
use crate::cluster::kselect::select_k;
use crate::cluster::pca::pca_project;
use crate::cluster::validation::{calinski_harabasz, silhouette};
use crate::cluster::{
    gmm::gmm, kmeans::kmeans, kmedoids::kmedoids, Diagnostics, DistanceMatrix, ModelAssignment,
    ModelId,
};
use crate::config::ConfigBundle;
use crate::consensus::{align_and_vote, consensus_from_text, consensus_to_text};
use crate::dataset::{parse_date, Dataset};
use crate::domain::PublicSuffixList;
use crate::error::{Error, Result};
use crate::explain::{shap_to_text, shap_values, summarize, Hyperparams, SurrogateMetrics};
use crate::featurize::{featurize_all, provenance_to_text, FetchMode};
use crate::ingest::{load_domains, registration_trend, IngestFilter};
use crate::intel::{domain_verdicts, load_intel, IntelRecord};
use crate::matrix::FeatureMatrix;
use crate::report::{render_report, ReportInputs};
use crate::select::{
    pearson_matrix, prune_correlated, standardize, ScalePolicy, ScaledMatrix, SelectionResult,
};
use crate::textio;

/// Full-run configuration: the feature/clustering config bundle plus input
/// paths and the ingest filter.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub bundle: ConfigBundle,
    pub domains_file: PathBuf,
    pub intel_file: Option<PathBuf>,
    pub fixtures_dir: Option<PathBuf>,
    pub keywords: Vec<String>,
    pub window: (NaiveDate, NaiveDate),
    pub live_only: bool,
    /// Fixed k; None selects k automatically via the silhouette consensus.
    pub k: Option<usize>,
}

impl RunConfig {
    /// Parses the run-config file: `input.*`, `filter.*`, `window.*` and
    /// `cluster.k` keys are consumed here, everything else must be a valid
    /// config-bundle key.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = textio::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut bundle_lines = String::new();
        let mut domains_file = None;
        let mut intel_file = None;
        let mut fixtures_dir = None;
        let mut keywords = Vec::new();
        let mut window_start = None;
        let mut window_end = None;
        let mut live_only = false;
        let mut k = None;

        for (line_no, line) in textio::data_lines(&text) {
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    format!("line {line_no}"),
                    "expected `key = value`",
                ));
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "input.domains" => domains_file = Some(base.join(value)),
                "input.intel" => intel_file = Some(base.join(value)),
                "input.fixtures" => fixtures_dir = Some(base.join(value)),
                "filter.keyword" => keywords.push(value.to_ascii_lowercase()),
                "filter.live_only" => live_only = value == "true" || value == "1",
                "window.start" => window_start = Some(parse_date(value, "config", line_no)?),
                "window.end" => window_end = Some(parse_date(value, "config", line_no)?),
                "cluster.k" => {
                    k =
                        Some(value.parse().map_err(|_| {
                            Error::config("cluster.k", "expected a positive integer")
                        })?);
                }
                _ => {
                    bundle_lines.push_str(line);
                    bundle_lines.push('\n');
                }
            }
        }
        let bundle = ConfigBundle::from_text(&bundle_lines, &base)?;
        let domains_file =
            domains_file.ok_or_else(|| Error::config("input.domains", "missing required key"))?;
        let window = match (window_start, window_end) {
            (Some(s), Some(e)) => (s, e),
            _ => {
                return Err(Error::config(
                    "window.start/window.end",
                    "both dates are required",
                ));
            }
        };
        Ok(RunConfig {
            bundle,
            domains_file,
            intel_file,
            fixtures_dir,
            keywords,
            window,
            live_only,
            k,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<(String, String)>,
}

/// Replay record for one run: config hash, seeds, and per-stage file digests.
/// Paths under the run directory are recorded relative to it, so manifests
/// from runs in different directories still compare equal.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    #[serde(skip)]
    root: PathBuf,
}

impl RunManifest {
    fn new(config_hash: String, seed: u64, root: PathBuf) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            seed,
            stages: Vec::new(),
            root,
        }
    }

    pub fn record(&mut self, stage: &str, inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
        let root = self.root.clone();
        let digest_all = |paths: &[&Path]| -> Result<Vec<(String, String)>> {
            paths
                .iter()
                .map(|p| {
                    let digest = if p.is_dir() {
                        textio::dir_digest(p)?
                    } else {
                        textio::file_digest(p)?
                    };
                    let name = p
                        .strip_prefix(&root)
                        .map(|rel| rel.display().to_string())
                        .unwrap_or_else(|_| p.display().to_string());
                    Ok((name, digest))
                })
                .collect()
        };
        self.stages.push(StageRecord {
            stage: stage.to_string(),
            inputs: digest_all(inputs)?,
            outputs: digest_all(outputs)?,
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Numeric(format!("manifest serialization failed: {e}")))?;
        textio::write_string(path, &(json + "\n"))
    }
}

pub struct StagePaths {
    pub out_dir: PathBuf,
}

impl StagePaths {
    pub fn new(out_dir: &Path) -> StagePaths {
        StagePaths {
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn dataset(&self) -> PathBuf {
        self.out_dir.join("dataset.tsv")
    }
    pub fn matrix(&self) -> PathBuf {
        self.out_dir.join("matrix.tsv")
    }
    pub fn provenance(&self) -> PathBuf {
        self.out_dir.join("provenance.tsv")
    }
    pub fn correlation(&self) -> PathBuf {
        self.out_dir.join("correlation.tsv")
    }
    pub fn selection(&self) -> PathBuf {
        self.out_dir.join("selection.tsv")
    }
    pub fn scaled(&self) -> PathBuf {
        self.out_dir.join("scaled.tsv")
    }
    pub fn gower(&self) -> PathBuf {
        self.out_dir.join("gower.tsv")
    }
    pub fn assignments(&self) -> PathBuf {
        self.out_dir.join("assignments")
    }
    pub fn consensus(&self) -> PathBuf {
        self.out_dir.join("consensus.tsv")
    }
    pub fn explain_dir(&self) -> PathBuf {
        self.out_dir.join("explain")
    }
    pub fn report_dir(&self) -> PathBuf {
        self.out_dir.join("report")
    }
    pub fn manifest(&self) -> PathBuf {
        self.out_dir.join("manifest.json")
    }
}

pub fn stage_ingest(
    domains: &Path,
    filter: &IngestFilter,
    live_only: bool,
    out: &Path,
    psl: &PublicSuffixList,
) -> Result<Dataset> {
    let ds = load_domains(domains, filter, psl)?;
    let ds = if live_only {
        let records = ds.records().iter().filter(|r| r.is_live).cloned().collect();
        Dataset::new(records, ds.window())?
    } else {
        ds
    };
    textio::write_string(out, &ds.to_text())?;
    Ok(ds)
}

pub fn stage_featurize(
    dataset_path: &Path,
    cfg: &ConfigBundle,
    mode: &FetchMode,
    out: &Path,
    provenance_out: &Path,
    psl: &PublicSuffixList,
) -> Result<FeatureMatrix> {
    let ds = Dataset::from_text(&textio::read_to_string(dataset_path)?, psl)?;
    if ds.is_empty() {
        return Err(Error::Numeric("featurize: dataset is empty".into()));
    }
    let (matrix, provenance) = featurize_all(&ds, cfg, mode, psl)?;
    matrix.write(out)?;
    textio::write_string(provenance_out, &provenance_to_text(&provenance))?;
    Ok(matrix)
}

pub struct SelectOutputs {
    pub selection: SelectionResult,
    pub scaled: ScaledMatrix,
    pub gower: DistanceMatrix,
}

pub fn stage_select(
    matrix_path: &Path,
    threshold: f64,
    paths: &StagePaths,
) -> Result<SelectOutputs> {
    let matrix = FeatureMatrix::read(matrix_path)?;
    let corr = pearson_matrix(&matrix)?;
    let selection = prune_correlated(&corr, threshold)?;
    let scaled = standardize(&matrix, &selection, ScalePolicy::ZscoreContinuous);
    let gower = gower_distance(&matrix, &selection)?;
    textio::write_string(&paths.correlation(), &corr.to_text())?;
    textio::write_string(&paths.selection(), &selection.to_text())?;
    textio::write_string(&paths.scaled(), &scaled.to_text())?;
    textio::write_string(&paths.gower(), &gower.to_text())?;
    Ok(SelectOutputs {
        selection,
        scaled,
        gower,
    })
}

fn labels_to_text(domains: &[String], assignment: &ModelAssignment) -> String {
    let mut out = format!(
        "# model\t{}\n# k\t{}\n# seed\t{}\nrow\tdomain\tlabel\n",
        assignment.model_id, assignment.k, assignment.seed
    );
    for (i, label) in assignment.labels.iter().enumerate() {
        out.push_str(&format!(
            "{i}\t{}\t{label}\n",
            domains.get(i).map(String::as_str).unwrap_or("")
        ));
    }
    out
}

pub fn labels_from_text(text: &str, path: &Path) -> Result<(ModelId, usize, Vec<usize>, u64)> {
    let mut model = None;
    let mut k = 0usize;
    let mut seed = 0u64;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# model\t") {
            model = ModelId::parse(rest.trim());
        } else if let Some(rest) = line.strip_prefix("# k\t") {
            k = rest.trim().parse().unwrap_or(0);
        } else if let Some(rest) = line.strip_prefix("# seed\t") {
            seed = rest.trim().parse().unwrap_or(0);
        }
    }
    let model = model.ok_or_else(|| Error::record(path, 1, "missing or bad `# model` header"))?;
    let mut labels = Vec::new();
    for (line_no, line) in textio::data_lines(text) {
        let cols = textio::split_row(line);
        if cols[0] == "row" {
            continue;
        }
        if cols.len() != 3 {
            return Err(Error::record(path, line_no, "expected 3 columns"));
        }
        labels.push(
            cols[2]
                .parse()
                .map_err(|_| Error::record(path, line_no, format!("bad label {:?}", cols[2])))?,
        );
    }
    Ok((model, k, labels, seed))
}

pub struct ClusterOutputs {
    pub assignments: Vec<ModelAssignment>,
    pub chosen_k: usize,
}

/// Runs all four models. With `k = None` the silhouette consensus picks k
/// first; curves, merge tree and PCA coordinates are always exported.
pub fn stage_cluster(
    scaled_path: &Path,
    gower_path: &Path,
    k: Option<usize>,
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
    out_dir: &Path,
) -> Result<ClusterOutputs> {
    let scaled = ScaledMatrix::from_text(&textio::read_to_string(scaled_path)?, scaled_path)?;
    let gower = DistanceMatrix::from_text(&textio::read_to_string(gower_path)?, gower_path)?;
    if scaled.n_rows() != gower.len() {
        return Err(Error::Numeric("scaled/gower row mismatch".into()));
    }
    let report = select_k(&scaled, &gower, k_range, seed)?;
    textio::write_string(&out_dir.join("kselect.tsv"), &report.to_text())?;
    let chosen_k = k.unwrap_or(report.consensus_k);

    let assignments = vec![
        kmeans(&scaled, chosen_k, seed)?,
        kmedoids(&gower, chosen_k, seed)?,
        hierarchical(&gower, chosen_k)?,
        gmm(&scaled, chosen_k, seed)?,
    ];
    for a in &assignments {
        a.validate()?;
        textio::write_string(
            &out_dir.join(format!("{}.labels.tsv", a.model_id)),
            &labels_to_text(&scaled.domains, a),
        )?;
        if let Diagnostics::Hierarchical { merges } = &a.diagnostics {
            textio::write_string(&out_dir.join("merge_tree.tsv"), &merges_to_text(merges))?;
        }
    }

    // per-model validity of the final partitions
    let euclid = DistanceMatrix::euclidean(&scaled);
    let mut validity = String::from("model\tsilhouette\tcalinski_harabasz\n");
    for a in &assignments {
        let dist = match a.model_id {
            ModelId::KMeans | ModelId::Gmm => &euclid,
            _ => &gower,
        };
        let sil = silhouette(&a.labels, dist)?;
        let ch = if a.model_id == ModelId::KMeans && chosen_k < scaled.n_rows() {
            textio::fmt_f64(calinski_harabasz(&scaled, &a.labels)?)
        } else {
            "-".to_string()
        };
        validity.push_str(&format!("{}\t{}\t{ch}\n", a.model_id, textio::fmt_f64(sil)));
    }
    textio::write_string(&out_dir.join("validity.tsv"), &validity)?;

    if scaled.n_cols() >= 2 {
        let pca = pca_project(&scaled)?;
        textio::write_string(&out_dir.join("pca.tsv"), &pca.to_text(&scaled.domains))?;
    }
    Ok(ClusterOutputs {
        assignments,
        chosen_k,
    })
}

pub fn stage_consensus(
    assignments_dir: &Path,
    seed: u64,
    out: &Path,
) -> Result<crate::consensus::ConsensusResult> {
    let mut assignments = Vec::new();
    let mut domains: Vec<String> = Vec::new();
    for model in ModelId::ALL {
        let path = assignments_dir.join(format!("{model}.labels.tsv"));
        if !path.is_file() {
            return Err(Error::MissingArtifact {
                stage: "consensus".into(),
                what: format!("{}", path.display()),
            });
        }
        let text = textio::read_to_string(&path)?;
        let (model_id, k, labels, file_seed) = labels_from_text(&text, &path)?;
        if domains.is_empty() {
            for (line_no, line) in textio::data_lines(&text) {
                let cols = textio::split_row(line);
                if cols[0] == "row" {
                    continue;
                }
                let _ = line_no;
                domains.push(cols[1].clone());
            }
        }
        assignments.push(ModelAssignment {
            model_id,
            k,
            labels,
            diagnostics: Diagnostics::Hierarchical { merges: vec![] },
            seed: file_seed,
        });
    }
    let (_, votes, result) = align_and_vote(&assignments, ModelId::KMeans, seed)?;
    textio::write_string(out, &consensus_to_text(&domains, &votes, &result))?;
    Ok(result)
}

pub struct ExplainOutputs {
    pub metrics: SurrogateMetrics,
    pub summary: crate::explain::ShapSummary,
}

pub fn stage_explain(
    matrix_path: &Path,
    selection_path: &Path,
    consensus_path: &Path,
    hp: &Hyperparams,
    seed: u64,
    out_dir: &Path,
) -> Result<ExplainOutputs> {
    let matrix = FeatureMatrix::read(matrix_path)?;
    let selection = if selection_path.is_file() {
        SelectionResult::from_text(&textio::read_to_string(selection_path)?, selection_path)?
    } else {
        SelectionResult::keep_all(matrix.catalog.ids())
    };
    let (_, consensus) =
        consensus_from_text(&textio::read_to_string(consensus_path)?, consensus_path)?;
    let outcome = crate::explain::train_surrogate(&matrix, &selection, &consensus, hp, seed)?;

    let cols = selection.kept_indices();
    let x_test: Vec<Vec<f64>> = outcome
        .test_indices
        .iter()
        .map(|&i| cols.iter().map(|&c| matrix.value(i, c)).collect())
        .collect();
    let test_domains: Vec<String> = outcome
        .test_indices
        .iter()
        .map(|&i| matrix.domains[i].clone())
        .collect();
    let shap = shap_values(&outcome.model, &x_test)?;
    let summary = summarize(&shap, &outcome.model.feature_ids, &x_test)?;

    textio::write_string(&out_dir.join("metrics.tsv"), &outcome.metrics.to_text())?;
    textio::write_string(
        &out_dir.join("confusion.tsv"),
        &outcome.metrics.confusion_to_text(),
    )?;
    textio::write_string(&out_dir.join("shap_summary.tsv"), &summary.to_text())?;
    textio::write_string(
        &out_dir.join("shap_values.tsv"),
        &shap_to_text(&shap, &outcome.model.feature_ids, &test_domains),
    )?;
    Ok(ExplainOutputs {
        metrics: outcome.metrics,
        summary,
    })
}

pub struct CharacterizeInputs<'a> {
    pub consensus_path: &'a Path,
    pub matrix_path: &'a Path,
    pub dataset_path: &'a Path,
    pub intel_path: Option<&'a Path>,
    pub explain: Option<&'a ExplainOutputs>,
    pub config_hash: String,
    pub seed: u64,
    pub risk_threshold: u8,
}

pub fn stage_characterize(
    inputs: &CharacterizeInputs<'_>,
    out_dir: &Path,
    psl: &PublicSuffixList,
) -> Result<()> {
    let (_, consensus) = consensus_from_text(
        &textio::read_to_string(inputs.consensus_path)?,
        inputs.consensus_path,
    )?;
    let matrix = FeatureMatrix::read(inputs.matrix_path)?;
    let dataset = Dataset::from_text(&textio::read_to_string(inputs.dataset_path)?, psl)?;
    let records: Vec<IntelRecord> = match inputs.intel_path {
        Some(path) => load_intel(path)?,
        None => Vec::new(),
    };
    let domain_names: Vec<String> = dataset.domains().map(|d| d.raw().to_string()).collect();
    let verdicts = domain_verdicts(&records, &domain_names, inputs.risk_threshold);
    let profiles = crate::characterize::build_profiles(&consensus, &matrix, &dataset, &verdicts)?;
    let intel_tables = crate::characterize::cluster_intel_table(
        &consensus,
        &dataset,
        &records,
        inputs.risk_threshold,
    )?;
    let transitions = crate::characterize::transition_table(&consensus, &dataset, &records)?;
    let trend = registration_trend(&dataset);
    render_report(
        &ReportInputs {
            config_hash: inputs.config_hash.clone(),
            seed: inputs.seed,
            consensus: &consensus,
            profiles: &profiles,
            intel: &intel_tables,
            transitions: &transitions,
            trend: &trend,
            explain: inputs.explain.map(|e| (&e.metrics, &e.summary)),
        },
        out_dir,
    )
}

pub struct RunSummary {
    pub chosen_k: usize,
    pub dataset_size: usize,
    pub report_dir: PathBuf,
    pub manifest_path: PathBuf,
}

/// Executes ingest -> featurize -> select -> cluster -> consensus -> explain
/// -> characterize, recording a manifest. Any stage error aborts with the
/// stage name attached.
pub fn run_all(config: &RunConfig, out_dir: &Path, psl: &PublicSuffixList) -> Result<RunSummary> {
    config.bundle.validate().map_err(|e| e.in_stage("config"))?;
    let paths = StagePaths::new(out_dir);
    let seed = config.bundle.seed;
    let mut manifest = RunManifest::new(config.bundle.content_hash(), seed, out_dir.to_path_buf());

    let filter = IngestFilter::new(config.keywords.clone(), config.window)
        .map_err(|e| e.in_stage("ingest"))?;
    let ds = stage_ingest(
        &config.domains_file,
        &filter,
        config.live_only,
        &paths.dataset(),
        psl,
    )
    .map_err(|e| e.in_stage("ingest"))?;
    manifest.record("ingest", &[&config.domains_file], &[&paths.dataset()])?;

    let mode = match &config.fixtures_dir {
        Some(dir) => FetchMode::Fixture(dir.clone()),
        None => FetchMode::Live(Default::default()),
    };
    stage_featurize(
        &paths.dataset(),
        &config.bundle,
        &mode,
        &paths.matrix(),
        &paths.provenance(),
        psl,
    )
    .map_err(|e| e.in_stage("featurize"))?;
    manifest.record(
        "featurize",
        &[&paths.dataset()],
        &[&paths.matrix(), &paths.provenance()],
    )?;

    stage_select(&paths.matrix(), config.bundle.correlation_threshold, &paths)
        .map_err(|e| e.in_stage("select"))?;
    manifest.record(
        "select",
        &[&paths.matrix()],
        &[
            &paths.correlation(),
            &paths.selection(),
            &paths.scaled(),
            &paths.gower(),
        ],
    )?;

    let cluster_out = stage_cluster(
        &paths.scaled(),
        &paths.gower(),
        config.k,
        config.bundle.k_range.clone(),
        seed,
        &paths.assignments(),
    )
    .map_err(|e| e.in_stage("cluster"))?;
    manifest.record(
        "cluster",
        &[&paths.scaled(), &paths.gower()],
        &[&paths.assignments()],
    )?;

    stage_consensus(&paths.assignments(), seed, &paths.consensus())
        .map_err(|e| e.in_stage("consensus"))?;
    manifest.record("consensus", &[&paths.assignments()], &[&paths.consensus()])?;

    let explain_out = stage_explain(
        &paths.matrix(),
        &paths.selection(),
        &paths.consensus(),
        &Hyperparams::default(),
        seed,
        &paths.explain_dir(),
    )
    .map_err(|e| e.in_stage("explain"))?;
    manifest.record(
        "explain",
        &[&paths.matrix(), &paths.selection(), &paths.consensus()],
        &[&paths.explain_dir()],
    )?;

    stage_characterize(
        &CharacterizeInputs {
            consensus_path: &paths.consensus(),
            matrix_path: &paths.matrix(),
            dataset_path: &paths.dataset(),
            intel_path: config.intel_file.as_deref(),
            explain: Some(&explain_out),
            config_hash: config.bundle.content_hash(),
            seed,
            risk_threshold: config.bundle.intel_risk_threshold,
        },
        &paths.report_dir(),
        psl,
    )
    .map_err(|e| e.in_stage("characterize"))?;
    let consensus_p = paths.consensus();
    let matrix_p = paths.matrix();
    let dataset_p = paths.dataset();
    let mut characterize_inputs: Vec<&Path> = vec![&consensus_p, &matrix_p, &dataset_p];
    if let Some(intel) = config.intel_file.as_deref() {
        characterize_inputs.push(intel);
    }
    let report_dir = paths.report_dir();
    manifest.record("characterize", &characterize_inputs, &[&report_dir])?;

    manifest.write(&paths.manifest())?;
    Ok(RunSummary {
        chosen_k: cluster_out.chosen_k,
        dataset_size: ds.len(),
        report_dir,
        manifest_path: paths.manifest(),
    })
}
