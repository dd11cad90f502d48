use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use campaign_lens::cluster::kselect::select_k;
use campaign_lens::config::{parse_k_range, ConfigBundle};
use campaign_lens::dataset::parse_date;
use campaign_lens::domain::PublicSuffixList;
use campaign_lens::error::Error;
use campaign_lens::explain::Hyperparams;
use campaign_lens::featurize::FetchMode;
use campaign_lens::fetch::LiveOptions;
use campaign_lens::ingest::IngestFilter;
use campaign_lens::pipeline::{self, CharacterizeInputs, ExplainOutputs, RunConfig, StagePaths};
use campaign_lens::textio;

#[derive(Parser)]
#[command(
    name = "campaign-lens",
    version,
    about = "Characterize event-themed website campaigns: ingest, featurize, cluster, vote, explain, report"
)]
struct Cli {
    /// Worker-pool width for live fetching.
    #[arg(long, global = true, default_value_t = 8, env = "CAMPAIGN_LENS_JOBS")]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Master seed for every randomized step.
    #[arg(long, default_value_t = 40, env = "CAMPAIGN_LENS_SEED")]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Load, filter and deduplicate a domain list into a dataset file.
    Ingest {
        #[arg(long)]
        domains: PathBuf,
        /// Comma-separated keywords OR-matched against the registrable part.
        #[arg(long, value_delimiter = ',')]
        keywords: Vec<String>,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Keep only records marked live.
        #[arg(long, default_value_t = false)]
        live_only: bool,
        /// Validate a line-delimited intel snapshot alongside the domains.
        #[arg(long)]
        intel: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the 34-feature matrix for a dataset.
    Featurize {
        #[arg(long)]
        dataset: PathBuf,
        /// fixture or live
        #[arg(long, default_value = "fixture")]
        mode: String,
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Recorded WHOIS directory for live mode.
        #[arg(long)]
        whois_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 15)]
        timeout_secs: u64,
        #[arg(long, default_value_t = 5)]
        max_redirects: u32,
        /// Optional config file overriding keyword/TLD lists.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlation pruning and scaling; also emits the gower matrix.
    Select {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 0.6, env = "CAMPAIGN_LENS_THRESHOLD")]
        threshold: f64,
        /// Selection output file; correlation.tsv, scaled.tsv and gower.tsv
        /// sidecars are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the four clustering models; `--k auto` uses silhouette consensus.
    Cluster {
        #[arg(long)]
        scaled: PathBuf,
        #[arg(long)]
        gower: PathBuf,
        #[arg(long, default_value = "auto")]
        k: String,
        #[arg(long, default_value = "2..10")]
        k_range: String,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Align model labelings and apply majority voting.
    Consensus {
        #[arg(long)]
        assignments: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the surrogate classifier and export Shapley attributions.
    Explain {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        selection: Option<PathBuf>,
        #[arg(long)]
        consensus: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate intel and cluster structure into the report.
    Characterize {
        #[arg(long)]
        consensus: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        intel: Option<PathBuf>,
        /// Threat-score threshold for the malicious rule.
        #[arg(long, default_value_t = 75)]
        risk_threshold: u8,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute the whole pipeline from a run-config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Copy of the manifest outside the run directory.
        #[arg(long)]
        manifest_out: Option<PathBuf>,
    },
    /// Evaluate silhouette/CH/AIC/BIC curves over a k range.
    SelectK {
        #[arg(long)]
        scaled: PathBuf,
        #[arg(long)]
        gower: PathBuf,
        #[arg(long, default_value = "2..10")]
        k_range: String,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(cli: Cli) -> campaign_lens::Result<()> {
    let psl = PublicSuffixList::bundled();
    match cli.command {
        Command::Ingest {
            domains,
            keywords,
            from,
            to,
            live_only,
            intel,
            out,
        } => {
            let window = (parse_date(&from, "--from", 0)?, parse_date(&to, "--to", 0)?);
            let filter = IngestFilter::new(keywords, window)?;
            let ds = pipeline::stage_ingest(&domains, &filter, live_only, &out, psl)?;
            if let Some(intel_path) = intel {
                let records = campaign_lens::intel::load_intel(&intel_path)?;
                let known: std::collections::BTreeSet<&str> =
                    ds.domains().map(|d| d.raw()).collect();
                let matched = records
                    .iter()
                    .filter(|r| known.contains(r.domain.as_str()))
                    .count();
                println!(
                    "intel snapshot valid: {} records, {matched} matching dataset domains",
                    records.len()
                );
            }
            println!("ingested {} records -> {}", ds.len(), out.display());
            Ok(())
        }
        Command::Featurize {
            dataset,
            mode,
            fixtures,
            whois_dir,
            timeout_secs,
            max_redirects,
            config,
            out,
        } => {
            let cfg = match config {
                Some(path) => ConfigBundle::from_file(&path)?,
                None => ConfigBundle::default(),
            };
            let fetch_mode = match mode.as_str() {
                "fixture" => {
                    let dir = fixtures
                        .ok_or_else(|| Error::config("--fixtures", "required in fixture mode"))?;
                    FetchMode::Fixture(dir)
                }
                "live" => FetchMode::Live(LiveOptions {
                    timeout: Duration::from_secs(timeout_secs),
                    max_redirects,
                    parallelism: cli.jobs,
                    whois_dir,
                    ..Default::default()
                }),
                other => {
                    return Err(Error::config(
                        "--mode",
                        format!("expected fixture or live, got {other:?}"),
                    ));
                }
            };
            let provenance = out.with_extension("provenance.tsv");
            let matrix =
                pipeline::stage_featurize(&dataset, &cfg, &fetch_mode, &out, &provenance, psl)?;
            println!(
                "featurized {} sites x {} features -> {}",
                matrix.n_rows(),
                matrix.n_cols(),
                out.display()
            );
            Ok(())
        }
        Command::Select {
            matrix,
            threshold,
            out,
        } => {
            let dir = out.parent().unwrap_or(std::path::Path::new("."));
            let mut paths = StagePaths::new(dir);
            paths.out_dir = dir.to_path_buf();
            let outputs = pipeline::stage_select(&matrix, threshold, &paths)?;
            // --out names the selection file specifically
            textio::write_string(&out, &outputs.selection.to_text())?;
            println!(
                "kept {} of {} features (threshold {threshold}); dropped {}",
                outputs.selection.kept.len(),
                outputs.selection.kept.len() + outputs.selection.dropped.len(),
                outputs
                    .selection
                    .dropped
                    .iter()
                    .map(|(id, _, _)| id.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            Ok(())
        }
        Command::Cluster {
            scaled,
            gower,
            k,
            k_range,
            seed,
            out,
        } => {
            let k_value =
                match k.as_str() {
                    "auto" => None,
                    other => Some(other.parse().map_err(|_| {
                        Error::config("--k", "expected `auto` or a positive integer")
                    })?),
                };
            let range = parse_k_range(&k_range)?;
            let outputs =
                pipeline::stage_cluster(&scaled, &gower, k_value, range, seed.seed, &out)?;
            println!("clustered with k={} -> {}", outputs.chosen_k, out.display());
            Ok(())
        }
        Command::Consensus {
            assignments,
            seed,
            out,
        } => {
            let result = pipeline::stage_consensus(&assignments, seed.seed, &out)?;
            println!(
                "consensus sizes {:?}, {} tie rows -> {}",
                result.cluster_sizes(),
                result.tie_rows.len(),
                out.display()
            );
            Ok(())
        }
        Command::Explain {
            matrix,
            selection,
            consensus,
            seed,
            out,
        } => {
            let selection_path =
                selection.unwrap_or_else(|| PathBuf::from("__no_selection_file__"));
            let outputs = pipeline::stage_explain(
                &matrix,
                &selection_path,
                &consensus,
                &Hyperparams::default(),
                seed.seed,
                &out,
            )?;
            println!(
                "surrogate accuracy {:.4}, macro F1 {:.4} -> {}",
                outputs.metrics.accuracy,
                outputs.metrics.macro_f1,
                out.display()
            );
            Ok(())
        }
        Command::Characterize {
            consensus,
            matrix,
            dataset,
            intel,
            risk_threshold,
            seed,
            out,
        } => {
            let explain: Option<ExplainOutputs> = None;
            pipeline::stage_characterize(
                &CharacterizeInputs {
                    consensus_path: &consensus,
                    matrix_path: &matrix,
                    dataset_path: &dataset,
                    intel_path: intel.as_deref(),
                    explain: explain.as_ref(),
                    config_hash: ConfigBundle::default().content_hash(),
                    seed: seed.seed,
                    risk_threshold,
                },
                &out,
                psl,
            )?;
            println!("report written to {}", out.display());
            Ok(())
        }
        Command::Run {
            config,
            out,
            manifest_out,
        } => {
            let run_config = RunConfig::from_file(&config)?;
            let summary = pipeline::run_all(&run_config, &out, psl)?;
            if let Some(dest) = manifest_out {
                std::fs::copy(&summary.manifest_path, &dest)
                    .map_err(|e| Error::io("copying manifest", e))?;
            }
            println!(
                "pipeline complete: {} sites, k={}, report at {}",
                summary.dataset_size,
                summary.chosen_k,
                summary.report_dir.display()
            );
            Ok(())
        }
        Command::SelectK {
            scaled,
            gower,
            k_range,
            seed,
            out,
        } => {
            let scaled_m = campaign_lens::select::ScaledMatrix::from_text(
                &textio::read_to_string(&scaled)?,
                &scaled,
            )?;
            let gower_m = campaign_lens::cluster::DistanceMatrix::from_text(
                &textio::read_to_string(&gower)?,
                &gower,
            )?;
            let range = parse_k_range(&k_range)?;
            let report = select_k(&scaled_m, &gower_m, range, seed.seed)?;
            textio::write_string(&out, &report.to_text())?;
            println!("consensus k = {} -> {}", report.consensus_k, out.display());
            Ok(())
        }
    }
}
