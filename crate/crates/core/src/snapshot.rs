//! Landing-page snapshots and WHOIS records: what the fetch layer produces
//! and the content/WHOIS features consume. Fixture mode reads
//! `fixtures/<domain>/{page.html,meta,whois.txt}`; live mode fills the same
//! structures over HTTP.

use std::collections::BTreeSet;
use std::path::Path;

use url::Url;

use crate::domain::{parse_domain_with, DomainName, PublicSuffixList};
use crate::error::{Error, Result};
use crate::html;
use crate::intel::IntelStage;
use crate::textio;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchStatus {
    Ok,
    RedirectFollowed,
    Error(String),
}

impl FetchStatus {
    pub fn is_error(&self) -> bool {
        matches!(self, FetchStatus::Error(_))
    }

    pub fn as_str(&self) -> String {
        match self {
            FetchStatus::Ok => "ok".into(),
            FetchStatus::RedirectFollowed => "redirect_followed".into(),
            FetchStatus::Error(code) => format!("error {code}"),
        }
    }

    pub fn parse(s: &str) -> Option<FetchStatus> {
        if s == "ok" {
            Some(FetchStatus::Ok)
        } else if s == "redirect_followed" {
            Some(FetchStatus::RedirectFollowed)
        } else if let Some(code) = s.strip_prefix("error") {
            Some(FetchStatus::Error(code.trim().to_string()))
        } else {
            None
        }
    }
}

/// One fetched landing page. Link sets are disjoint by construction:
/// a target is external exactly when it resolves to a different registrable
/// domain than the queried one.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSnapshot {
    pub domain: DomainName,
    pub fetch_status: FetchStatus,
    pub final_url: String,
    pub landing_body: Vec<u8>,
    pub ssl_retrievable: bool,
    pub internal_links: BTreeSet<String>,
    pub external_links: BTreeSet<String>,
    pub stage: IntelStage,
}

impl SiteSnapshot {
    pub fn landing_size_kb(&self) -> f64 {
        self.landing_body.len() as f64 / 1024.0
    }

    pub fn error(domain: DomainName, code: impl Into<String>) -> SiteSnapshot {
        SiteSnapshot {
            domain,
            fetch_status: FetchStatus::Error(code.into()),
            final_url: String::new(),
            landing_body: Vec::new(),
            ssl_retrievable: false,
            internal_links: BTreeSet::new(),
            external_links: BTreeSet::new(),
            stage: IntelStage::Fes,
        }
    }
}

/// WHOIS fields the pipeline uses.
#[derive(Debug, Clone, PartialEq)]
pub struct WhoisRecord {
    pub domain: DomainName,
    pub registrar: Option<String>,
    pub name_servers: Vec<String>,
}

/// Splits raw link targets into internal/external sets relative to the
/// queried domain. Non-navigational schemes (mailto, javascript, tel, data)
/// and fragment-only targets are dropped; everything else keeps its raw
/// extracted string.
pub fn classify_links(
    queried: &DomainName,
    raw_links: &[String],
    psl: &PublicSuffixList,
) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut internal = BTreeSet::new();
    let mut external = BTreeSet::new();
    let base = Url::parse(&format!("https://{}/", queried.raw())).expect("valid base url");
    let own = queried.registrable_domain();

    for raw in raw_links {
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let resolved = match Url::parse(raw) {
            Ok(u) => u,
            Err(_) => match base.join(raw) {
                Ok(u) => u,
                Err(_) => continue,
            },
        };
        match resolved.scheme() {
            "http" | "https" => {}
            _ => continue,
        }
        let same_site = resolved
            .host_str()
            .and_then(|h| parse_domain_with(h, psl).ok())
            .map(|d| d.registrable_domain() == own)
            // unparseable hosts (IPs, single labels) are not our site
            .unwrap_or(false);
        if same_site {
            internal.insert(raw.to_string());
        } else {
            external.insert(raw.to_string());
        }
    }
    (internal, external)
}

/// Builds a snapshot from an already-fetched body plus transport facts.
pub fn snapshot_from_body(
    domain: DomainName,
    body: Vec<u8>,
    final_url: String,
    ssl_retrievable: bool,
    fetch_status: FetchStatus,
    stage: IntelStage,
    psl: &PublicSuffixList,
) -> SiteSnapshot {
    let scanned = html::scan(&String::from_utf8_lossy(&body));
    let (internal_links, external_links) = classify_links(&domain, &scanned.links, psl);
    SiteSnapshot {
        domain,
        fetch_status,
        final_url,
        landing_body: body,
        ssl_retrievable,
        internal_links,
        external_links,
        stage,
    }
}

/// Visible text plus attribute values, for the keyword-token features.
pub fn landing_text(snapshot: &SiteSnapshot) -> String {
    html::scan(&String::from_utf8_lossy(&snapshot.landing_body)).text
}

/// Reads `dir/<domain>/page.html` + `dir/<domain>/meta` into a snapshot.
/// A missing fixture directory is a hard error; a fixture whose meta records
/// a fetch error yields an error-status snapshot (content features masked).
pub fn load_fixture_snapshot(
    dir: &Path,
    domain: &DomainName,
    psl: &PublicSuffixList,
) -> Result<SiteSnapshot> {
    let site_dir = dir.join(domain.raw());
    if !site_dir.is_dir() {
        return Err(Error::FixtureMissing {
            domain: domain.raw().to_string(),
            dir: dir.to_path_buf(),
        });
    }
    let meta_path = site_dir.join("meta");
    let meta_text = textio::read_to_string(&meta_path)?;
    let mut final_url = String::new();
    let mut status = FetchStatus::Ok;
    let mut ssl = false;
    let mut stage = IntelStage::Fes;
    for (line_no, line) in textio::data_lines(&meta_text) {
        let Some((key, value)) = line.split_once(':') else {
            return Err(Error::record(&meta_path, line_no, "expected `key: value`"));
        };
        let value = value.trim();
        match key.trim() {
            "final_url" => final_url = value.to_string(),
            "status" => {
                status = FetchStatus::parse(value).ok_or_else(|| {
                    Error::record(&meta_path, line_no, format!("bad status {value:?}"))
                })?;
            }
            "ssl" => ssl = value == "true" || value == "1",
            "stage" => {
                stage = IntelStage::parse(value).ok_or_else(|| {
                    Error::record(&meta_path, line_no, format!("bad stage {value:?}"))
                })?;
            }
            other => {
                return Err(Error::record(
                    &meta_path,
                    line_no,
                    format!("unknown meta key {other:?}"),
                ));
            }
        }
    }
    if status.is_error() {
        let mut snap = SiteSnapshot::error(domain.clone(), "fixture");
        snap.fetch_status = status;
        snap.ssl_retrievable = ssl;
        snap.stage = stage;
        return Ok(snap);
    }
    let body_path = site_dir.join("page.html");
    let body = std::fs::read(&body_path)
        .map_err(|e| Error::io(format!("reading {}", body_path.display()), e))?;
    Ok(snapshot_from_body(
        domain.clone(),
        body,
        final_url,
        ssl,
        status,
        stage,
        psl,
    ))
}

/// Reads `dir/<domain>/whois.txt` when present.
pub fn load_fixture_whois(dir: &Path, domain: &DomainName) -> Result<Option<WhoisRecord>> {
    let path = dir.join(domain.raw()).join("whois.txt");
    if !path.is_file() {
        return Ok(None);
    }
    let text = textio::read_to_string(&path)?;
    let mut registrar = None;
    let mut name_servers = Vec::new();
    for (line_no, line) in textio::data_lines(&text) {
        let Some((key, value)) = line.split_once(':') else {
            return Err(Error::record(&path, line_no, "expected `key: value`"));
        };
        let value = value.trim();
        match key.trim() {
            "registrar" => {
                if !value.is_empty() {
                    registrar = Some(value.to_string());
                }
            }
            "name_server" | "ns" => {
                if !value.is_empty() {
                    name_servers.push(value.to_ascii_lowercase());
                }
            }
            other => {
                return Err(Error::record(
                    &path,
                    line_no,
                    format!("unknown whois key {other:?}"),
                ));
            }
        }
    }
    Ok(Some(WhoisRecord {
        domain: domain.clone(),
        registrar,
        name_servers,
    }))
}
