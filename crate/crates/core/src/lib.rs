//! campaign-lens: a batch pipeline that characterizes event-themed website
//! campaigns. Feature extraction over domain lists and recorded site
//! snapshots, consensus clustering across four unsupervised models,
//! surrogate-model Shapley explanations, and threat-characterization
//! reports.

pub mod catalog;
pub mod characterize;
pub mod cluster;
pub mod config;
pub mod consensus;
pub mod dataset;
pub mod domain;
pub mod error;
pub mod explain;
pub mod featurize;
pub mod fetch;
pub mod html;
pub mod ingest;
pub mod intel;
pub mod matrix;
pub mod pipeline;
pub mod report;
pub mod select;
pub mod snapshot;
pub mod textio;

pub use catalog::{catalog_default, FeatureCatalog, FeatureId};
pub use config::ConfigBundle;
pub use dataset::{Dataset, WebsiteRecord};
pub use domain::{parse_domain, parse_domain_with, DomainName, PublicSuffixList};
pub use error::{Error, Result};
pub use matrix::FeatureMatrix;
