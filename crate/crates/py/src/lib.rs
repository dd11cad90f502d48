//! Python bindings: domain parsing, the feature catalog, the four clustering
//! models, consensus voting, silhouette, the surrogate explainer, the intel
//! rule, and the full pipeline runner.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use campaign_lens::catalog::{catalog_default, FeatureId};
use campaign_lens::cluster::gmm::gmm;
use campaign_lens::cluster::hierarchical::hierarchical;
use campaign_lens::cluster::kmeans::kmeans;
use campaign_lens::cluster::kmedoids::kmedoids;
use campaign_lens::cluster::validation::{calinski_harabasz, silhouette as silhouette_core};
use campaign_lens::cluster::{
    Diagnostics, DistanceMatrix, DistanceMetric, ModelAssignment, ModelId,
};
use campaign_lens::config::ConfigBundle;
use campaign_lens::consensus::align_and_vote;
use campaign_lens::domain::{parse_domain as parse_domain_core, PublicSuffixList};
use campaign_lens::explain::{boost, shap_values, stratified_split, summarize, Hyperparams};
use campaign_lens::featurize::extract_lexical;
use campaign_lens::intel::{classify_intel as classify_intel_core, IntelRecord, IntelStage};
use campaign_lens::pipeline::{run_all, RunConfig};
use campaign_lens::select::{ScalePolicy, ScaledMatrix};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A parsed domain name.
#[pyclass(name = "DomainName")]
struct PyDomainName {
    #[pyo3(get)]
    raw: String,
    #[pyo3(get)]
    labels: Vec<String>,
    #[pyo3(get)]
    registrable_part: String,
    #[pyo3(get)]
    public_suffix: String,
    #[pyo3(get)]
    registrable_domain: String,
    #[pyo3(get)]
    lexical_string: String,
}

#[pymethods]
impl PyDomainName {
    fn __repr__(&self) -> String {
        format!(
            "DomainName(raw='{}', registrable_part='{}', public_suffix='{}')",
            self.raw, self.registrable_part, self.public_suffix
        )
    }
}

/// Parse a domain against the bundled public-suffix snapshot.
#[pyfunction]
fn parse_domain(raw: &str) -> PyResult<PyDomainName> {
    let d = parse_domain_core(raw).map_err(value_err)?;
    Ok(PyDomainName {
        raw: d.raw().to_string(),
        labels: d.labels().to_vec(),
        registrable_part: d.registrable_part().to_string(),
        public_suffix: d.public_suffix().to_string(),
        registrable_domain: d.registrable_domain(),
        lexical_string: d.lexical_string(),
    })
}

/// The 34-feature catalog as (id, name, category, kind) tuples.
#[pyfunction]
fn feature_catalog() -> Vec<(String, String, String, String)> {
    catalog_default()
        .entries()
        .iter()
        .map(|e| {
            (
                e.id.to_string(),
                e.name.to_string(),
                e.category.to_string(),
                e.kind.to_string(),
            )
        })
        .collect()
}

/// Lexical features f1..f13 for a domain, using the default keyword lists.
#[pyfunction]
fn lexical_features(domain: &str) -> PyResult<Vec<f64>> {
    let d = parse_domain_core(domain).map_err(value_err)?;
    Ok(extract_lexical(&d, &ConfigBundle::default()).to_vec())
}

fn scaled_from_rows(rows: Vec<Vec<f64>>) -> PyResult<ScaledMatrix> {
    if rows.is_empty() {
        return Err(value_err("rows must be nonempty"));
    }
    let dim = rows[0].len();
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(value_err("rows must be a rectangular nonempty matrix"));
    }
    Ok(ScaledMatrix {
        ids: (1..=dim).map(|i| FeatureId(i as u8)).collect(),
        domains: (0..rows.len()).map(|i| format!("row{i}")).collect(),
        values: rows,
        policy: ScalePolicy::None,
        moments: vec![(0.0, 1.0); dim],
    })
}

fn distance_from_rows(dist: Vec<Vec<f64>>) -> PyResult<DistanceMatrix> {
    let n = dist.len();
    let mut values = Vec::with_capacity(n * n);
    for row in &dist {
        if row.len() != n {
            return Err(value_err("distance matrix must be square"));
        }
        values.extend_from_slice(row);
    }
    DistanceMatrix::from_values(DistanceMetric::EuclideanScaled, n, values).map_err(value_err)
}

/// Pairwise euclidean distances for a row matrix.
#[pyfunction]
fn euclidean_distances(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let x = scaled_from_rows(rows)?;
    let d = DistanceMatrix::euclidean(&x);
    Ok((0..d.len())
        .map(|i| (0..d.len()).map(|j| d.get(i, j)).collect())
        .collect())
}

/// Lloyd k-means with k-means++ restarts; returns (labels, final_sse).
#[pyfunction]
#[pyo3(signature = (rows, k, seed = 40))]
fn kmeans_fit(rows: Vec<Vec<f64>>, k: usize, seed: u64) -> PyResult<(Vec<usize>, f64)> {
    let x = scaled_from_rows(rows)?;
    let a = kmeans(&x, k, seed).map_err(value_err)?;
    let Diagnostics::KMeans { inertia_trace, .. } = &a.diagnostics else {
        unreachable!()
    };
    Ok((a.labels, *inertia_trace.last().unwrap_or(&0.0)))
}

/// PAM k-medoids on a distance matrix; returns (labels, medoids, cost).
#[pyfunction]
#[pyo3(signature = (dist, k, seed = 40))]
fn kmedoids_fit(
    dist: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
) -> PyResult<(Vec<usize>, Vec<usize>, f64)> {
    let d = distance_from_rows(dist)?;
    let a = kmedoids(&d, k, seed).map_err(value_err)?;
    let Diagnostics::KMedoids {
        total_dissimilarity,
        medoids,
        ..
    } = &a.diagnostics
    else {
        unreachable!()
    };
    Ok((a.labels, medoids.clone(), *total_dissimilarity))
}

/// Average-linkage agglomerative clustering cut at k; returns
/// (labels, merges) with merges as (cluster_a, cluster_b, height, new_id).
#[pyfunction]
fn hierarchical_fit(
    dist: Vec<Vec<f64>>,
    k: usize,
) -> PyResult<(Vec<usize>, Vec<(usize, usize, f64, usize)>)> {
    let d = distance_from_rows(dist)?;
    let a = hierarchical(&d, k).map_err(value_err)?;
    let Diagnostics::Hierarchical { merges } = &a.diagnostics else {
        unreachable!()
    };
    Ok((a.labels, merges.clone()))
}

/// Diagonal-covariance GMM fit by EM; returns (labels, log_likelihood, aic, bic).
#[pyfunction]
#[pyo3(signature = (rows, k, seed = 40))]
fn gmm_fit(rows: Vec<Vec<f64>>, k: usize, seed: u64) -> PyResult<(Vec<usize>, f64, f64, f64)> {
    let x = scaled_from_rows(rows)?;
    let a = gmm(&x, k, seed).map_err(value_err)?;
    let Diagnostics::Gmm {
        log_likelihood_trace,
        aic,
        bic,
        ..
    } = &a.diagnostics
    else {
        unreachable!()
    };
    Ok((
        a.labels,
        *log_likelihood_trace.last().unwrap_or(&f64::NAN),
        *aic,
        *bic,
    ))
}

/// Mean silhouette of a labeling (labels 1..=k) on a distance matrix.
#[pyfunction]
fn silhouette(labels: Vec<usize>, dist: Vec<Vec<f64>>) -> PyResult<f64> {
    let d = distance_from_rows(dist)?;
    silhouette_core(&labels, &d).map_err(value_err)
}

/// Calinski-Harabasz score of a labeling over a row matrix.
#[pyfunction]
fn calinski_harabasz_score(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    let x = scaled_from_rows(rows)?;
    calinski_harabasz(&x, &labels).map_err(value_err)
}

/// Align up to four model labelings by maximum overlap and fuse them with
/// majority voting; returns (final_labels, tie_rows, vote_matrix).
#[pyfunction]
#[pyo3(signature = (labelings, k, seed = 40))]
fn majority_vote(
    labelings: Vec<Vec<usize>>,
    k: usize,
    seed: u64,
) -> PyResult<(Vec<usize>, Vec<usize>, Vec<Vec<usize>>)> {
    if labelings.is_empty() || labelings.len() > ModelId::ALL.len() {
        return Err(value_err(format!(
            "expected 1..={} labelings, got {}",
            ModelId::ALL.len(),
            labelings.len()
        )));
    }
    let assignments: Vec<ModelAssignment> = labelings
        .into_iter()
        .zip(ModelId::ALL)
        .map(|(labels, model_id)| ModelAssignment {
            model_id,
            k,
            labels,
            diagnostics: Diagnostics::Hierarchical { merges: vec![] },
            seed,
        })
        .collect();
    let (_, votes, result) =
        align_and_vote(&assignments, ModelId::KMeans, seed).map_err(value_err)?;
    Ok((result.final_labels, result.tie_rows, votes.votes))
}

/// Train the gradient-boosted surrogate on (rows, labels 1..=K) with the
/// default hyper-parameters, explain the held-out rows with exact tree
/// Shapley values, and return a summary dict.
#[pyfunction]
#[pyo3(signature = (rows, labels, seed = 40))]
fn explain_surrogate<'py>(
    py: Python<'py>,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    seed: u64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    if rows.len() != labels.len() {
        return Err(value_err("rows and labels must have equal length"));
    }
    let k = *labels
        .iter()
        .max()
        .ok_or_else(|| value_err("empty labels"))?;
    if k < 2 {
        return Err(value_err("need at least two classes"));
    }
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    let (train_idx, test_idx) = stratified_split(&labels, 0.2, seed);
    let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| rows[i].clone()).collect();
    let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i] - 1).collect();
    let feature_ids: Vec<FeatureId> = (1..=dim).map(|i| FeatureId(i as u8)).collect();
    let hp = Hyperparams::default();
    let model = boost::train(&train_rows, &train_labels, k, feature_ids, &hp).map_err(value_err)?;

    let mut correct = 0usize;
    for &i in &test_idx {
        if model.predict_class(&rows[i]) == labels[i] - 1 {
            correct += 1;
        }
    }
    let x_test: Vec<Vec<f64>> = test_idx.iter().map(|&i| rows[i].clone()).collect();
    let shap = shap_values(&model, &x_test).map_err(value_err)?;
    let summary = summarize(&shap, &model.feature_ids, &x_test).map_err(value_err)?;

    let out = pyo3::types::PyDict::new(py);
    out.set_item("accuracy", correct as f64 / test_idx.len().max(1) as f64)?;
    out.set_item("train_rows", train_idx.len())?;
    out.set_item("test_rows", test_idx.len())?;
    out.set_item("base_values", shap.base.clone())?;
    let ranked: Vec<Vec<(String, f64, i8)>> = summary
        .per_class
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|(id, phi, dir)| (id.to_string(), *phi, *dir))
                .collect()
        })
        .collect();
    out.set_item("top_features", ranked)?;
    Ok(out)
}

/// Correlation pruning, scaling and Gower distance for a feature-matrix
/// file (as written by the featurize stage). Returns a dict with the kept
/// feature ids, drop decisions, z-scored rows and the Gower matrix.
#[pyfunction]
#[pyo3(signature = (matrix_path, threshold = 0.6))]
fn select_features<'py>(
    py: Python<'py>,
    matrix_path: PathBuf,
    threshold: f64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    use campaign_lens::cluster::gower::gower_distance;
    use campaign_lens::matrix::FeatureMatrix;
    use campaign_lens::select::{pearson_matrix, prune_correlated, standardize};

    let matrix = FeatureMatrix::read(&matrix_path).map_err(value_err)?;
    let corr = pearson_matrix(&matrix).map_err(value_err)?;
    let selection = prune_correlated(&corr, threshold).map_err(value_err)?;
    let scaled = standardize(&matrix, &selection, ScalePolicy::ZscoreContinuous);
    let gower = gower_distance(&matrix, &selection).map_err(value_err)?;

    let out = pyo3::types::PyDict::new(py);
    out.set_item("domains", matrix.domains.clone())?;
    out.set_item(
        "kept",
        selection
            .kept
            .iter()
            .map(|id| id.to_string())
            .collect::<Vec<_>>(),
    )?;
    out.set_item(
        "dropped",
        selection
            .dropped
            .iter()
            .map(|(id, partner, c)| (id.to_string(), partner.to_string(), *c))
            .collect::<Vec<_>>(),
    )?;
    out.set_item("scaled", scaled.values.clone())?;
    let n = gower.len();
    let gower_rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| gower.get(i, j)).collect())
        .collect();
    out.set_item("gower", gower_rows)?;
    Ok(out)
}

/// The recorded-intel maliciousness rule: any threat flag and risk at or
/// above the threshold.
#[pyfunction]
#[pyo3(signature = (spamming, malware, phishing, suspicious, risk_score, threshold = 75))]
fn classify_intel(
    spamming: bool,
    malware: bool,
    phishing: bool,
    suspicious: bool,
    risk_score: u8,
    threshold: u8,
) -> PyResult<String> {
    if risk_score > 100 {
        return Err(value_err("risk_score outside 0..100"));
    }
    let record = IntelRecord {
        domain: "py.invalid".into(),
        source: "ipqs".into(),
        stage: IntelStage::Iqs,
        spamming,
        malware,
        phishing,
        suspicious,
        parking: false,
        risk_score,
        vt_status: None,
    };
    Ok(classify_intel_core(&record, threshold).as_str().to_string())
}

/// Run the whole pipeline from a run-config file into `out_dir`.
#[pyfunction]
fn run_pipeline<'py>(
    py: Python<'py>,
    config_path: PathBuf,
    out_dir: PathBuf,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let config = RunConfig::from_file(&config_path).map_err(value_err)?;
    let summary = run_all(&config, &out_dir, PublicSuffixList::bundled()).map_err(value_err)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("dataset_size", summary.dataset_size)?;
    out.set_item("chosen_k", summary.chosen_k)?;
    out.set_item("report_dir", summary.report_dir)?;
    out.set_item("manifest_path", summary.manifest_path)?;
    Ok(out)
}

/// Default configuration serialized to its canonical text form, as a dict of
/// scalar settings plus the list lengths (handy for introspection).
#[pyfunction]
fn default_config(py: Python<'_>) -> PyResult<Bound<'_, pyo3::types::PyDict>> {
    let cfg = ConfigBundle::default();
    let out = pyo3::types::PyDict::new(py);
    out.set_item("seed", cfg.seed)?;
    out.set_item("correlation_threshold", cfg.correlation_threshold)?;
    out.set_item("k_range", (*cfg.k_range.start(), *cfg.k_range.end()))?;
    out.set_item("intel_risk_threshold", cfg.intel_risk_threshold)?;
    let lists = pyo3::types::PyDict::new(py);
    let pairs: Vec<(&str, usize)> = vec![
        ("fundraising_keywords", cfg.fundraising_keywords.len()),
        ("help_keywords", cfg.help_keywords.len()),
        ("cause_keywords", cfg.cause_keywords.len()),
        ("war_keywords", cfg.war_keywords.len()),
        ("crypto_keywords", cfg.crypto_keywords.len()),
        ("bank_keywords", cfg.bank_keywords.len()),
        ("card_keywords", cfg.card_keywords.len()),
        ("cheap_tlds", cfg.cheap_tlds.len()),
        ("shortener_domains", cfg.shortener_domains.len()),
        ("social_media_domains", cfg.social_media_domains.len()),
        ("dictionary", cfg.dictionary.len()),
    ];
    let map: BTreeMap<&str, usize> = pairs.into_iter().collect();
    for (name, len) in map {
        lists.set_item(name, len)?;
    }
    out.set_item("list_sizes", lists)?;
    out.set_item("config_hash", cfg.content_hash())?;
    Ok(out)
}

#[pymodule]
fn campaign_lens_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomainName>()?;
    m.add_function(wrap_pyfunction!(parse_domain, m)?)?;
    m.add_function(wrap_pyfunction!(feature_catalog, m)?)?;
    m.add_function(wrap_pyfunction!(lexical_features, m)?)?;
    m.add_function(wrap_pyfunction!(euclidean_distances, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans_fit, m)?)?;
    m.add_function(wrap_pyfunction!(kmedoids_fit, m)?)?;
    m.add_function(wrap_pyfunction!(hierarchical_fit, m)?)?;
    m.add_function(wrap_pyfunction!(gmm_fit, m)?)?;
    m.add_function(wrap_pyfunction!(silhouette, m)?)?;
    m.add_function(wrap_pyfunction!(calinski_harabasz_score, m)?)?;
    m.add_function(wrap_pyfunction!(majority_vote, m)?)?;
    m.add_function(wrap_pyfunction!(explain_surrogate, m)?)?;
    m.add_function(wrap_pyfunction!(select_features, m)?)?;
    m.add_function(wrap_pyfunction!(classify_intel, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
