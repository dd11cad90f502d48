//! Live landing-page fetching: a bounded worker pool, https-then-http
//! attempts, redirect following, and optional DNS pinning (useful both for
//! testing and for re-probing a site whose records have moved).

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use log::{debug, warn};
use ureq::config::Config;
use ureq::http::Uri;
use ureq::unversioned::resolver::{ResolvedSocketAddrs, Resolver};
use ureq::unversioned::transport::{DefaultConnector, NextTimeout};
use ureq::{Agent, ResponseExt};

use crate::dataset::Dataset;
use crate::domain::{DomainName, PublicSuffixList};
use crate::error::Result;
use crate::intel::IntelStage;
use crate::snapshot::{
    load_fixture_whois, snapshot_from_body, FetchStatus, SiteSnapshot, WhoisRecord,
};

#[derive(Debug, Clone)]
pub struct LiveOptions {
    pub timeout: Duration,
    pub max_redirects: u32,
    pub parallelism: usize,
    /// Pin hosts to fixed addresses instead of system DNS.
    pub dns_overrides: BTreeMap<String, SocketAddr>,
    /// Directory of recorded `<domain>/whois.txt` files, since live WHOIS
    /// querying is out of scope.
    pub whois_dir: Option<PathBuf>,
    pub stage: IntelStage,
}

impl Default for LiveOptions {
    fn default() -> Self {
        LiveOptions {
            timeout: Duration::from_secs(15),
            max_redirects: 5,
            parallelism: 8,
            dns_overrides: BTreeMap::new(),
            whois_dir: None,
            stage: IntelStage::Fes,
        }
    }
}

/// Resolver that consults the pin table before falling back to system DNS.
#[derive(Debug)]
struct PinnedResolver {
    pins: BTreeMap<String, SocketAddr>,
    fallback: ureq::unversioned::resolver::DefaultResolver,
}

impl Resolver for PinnedResolver {
    fn resolve(
        &self,
        uri: &Uri,
        config: &Config,
        timeout: NextTimeout,
    ) -> std::result::Result<ResolvedSocketAddrs, ureq::Error> {
        if let Some(host) = uri.host() {
            if let Some(addr) = self.pins.get(host) {
                let mut out = ResolvedSocketAddrs::from_fn(|_| *addr);
                out.push(*addr);
                return Ok(out);
            }
        }
        self.fallback.resolve(uri, config, timeout)
    }
}

fn build_agent(opts: &LiveOptions) -> Agent {
    let config = Config::builder()
        .timeout_global(Some(opts.timeout))
        .max_redirects(opts.max_redirects)
        .http_status_as_error(false)
        .user_agent("campaign-lens/0.1")
        .build();
    let resolver = PinnedResolver {
        pins: opts.dns_overrides.clone(),
        fallback: ureq::unversioned::resolver::DefaultResolver::default(),
    };
    Agent::with_parts(config, DefaultConnector::default(), resolver)
}

struct Transport {
    body: Vec<u8>,
    final_url: String,
    status: u16,
}

fn try_fetch(agent: &Agent, url: &str) -> std::result::Result<Transport, ureq::Error> {
    let mut res = agent.get(url).call()?;
    let final_url = res.get_uri().to_string();
    let status = res.status().as_u16();
    let body = res.body_mut().read_to_vec()?;
    Ok(Transport {
        body,
        final_url,
        status,
    })
}

/// Fetches one domain: https first (any transport success proves the
/// certificate is retrievable), then plain http. Non-2xx terminal statuses
/// degrade to an error snapshot so the row gets masked, not dropped.
pub fn fetch_one(domain: &DomainName, opts: &LiveOptions, psl: &PublicSuffixList) -> SiteSnapshot {
    let agent = build_agent(opts);
    let https_url = format!("https://{}/", domain.raw());
    let http_url = format!("http://{}/", domain.raw());

    let (transport, ssl, requested) = match try_fetch(&agent, &https_url) {
        Ok(t) => (Ok(t), true, https_url.clone()),
        Err(e) => {
            debug!("https fetch of {} failed: {e}", domain.raw());
            (try_fetch(&agent, &http_url), false, http_url.clone())
        }
    };
    match transport {
        Ok(t) if (200..300).contains(&t.status) => {
            let status = if t.final_url == requested {
                FetchStatus::Ok
            } else {
                FetchStatus::RedirectFollowed
            };
            let mut snap = snapshot_from_body(
                domain.clone(),
                t.body,
                t.final_url,
                ssl,
                status,
                opts.stage,
                psl,
            );
            snap.ssl_retrievable = ssl;
            snap
        }
        Ok(t) => {
            let mut snap = SiteSnapshot::error(domain.clone(), t.status.to_string());
            snap.ssl_retrievable = ssl;
            snap.stage = opts.stage;
            snap
        }
        Err(e) => {
            warn!("fetch of {} failed: {e}", domain.raw());
            let mut snap = SiteSnapshot::error(domain.clone(), "transport");
            snap.stage = opts.stage;
            snap
        }
    }
}

/// Fetches every dataset record with a bounded worker pool. Results are
/// merged in dataset order, so output does not depend on completion order.
pub fn fetch_site_live(
    ds: &Dataset,
    opts: &LiveOptions,
    psl: &PublicSuffixList,
) -> Vec<(SiteSnapshot, Option<WhoisRecord>)> {
    let jobs: Vec<(usize, DomainName)> = ds
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.domain.clone()))
        .collect();
    let queue = Arc::new(Mutex::new(jobs));
    let results: Arc<Mutex<Vec<Option<SiteSnapshot>>>> =
        Arc::new(Mutex::new((0..ds.len()).map(|_| None).collect()));
    let width = opts.parallelism.max(1).min(ds.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..width {
            let queue = Arc::clone(&queue);
            let results = Arc::clone(&results);
            let opts = opts.clone();
            scope.spawn(move || loop {
                let job = queue.lock().expect("queue lock").pop();
                let Some((idx, domain)) = job else { break };
                let snap = fetch_one(&domain, &opts, psl);
                results.lock().expect("results lock")[idx] = Some(snap);
            });
        }
    });

    let snaps = Arc::try_unwrap(results)
        .expect("workers joined")
        .into_inner()
        .expect("results lock");
    snaps
        .into_iter()
        .zip(ds.records())
        .map(|(snap, record)| {
            let snap = snap.expect("every job completed");
            let whois = opts
                .whois_dir
                .as_ref()
                .and_then(|dir| load_fixture_whois(dir, &record.domain).ok().flatten());
            (snap, whois)
        })
        .collect()
}

/// See [`fetch_one`]; kept as the module-level entry point for single sites.
pub fn fetch_site(
    domain: &DomainName,
    opts: &LiveOptions,
    psl: &PublicSuffixList,
) -> Result<SiteSnapshot> {
    Ok(fetch_one(domain, opts, psl))
}
