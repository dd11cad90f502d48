//! Website records and the ordered dataset they form. Row order is frozen at
//! ingest: row `i` corresponds to the same website in every downstream
//! artifact (feature matrix, labels, votes, report).

use chrono::NaiveDate;

use crate::domain::{parse_domain_with, DomainName, PublicSuffixList};
use crate::error::{Error, Result};
use crate::textio;

/// Verdict taxonomy used when a site has been inspected by hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManualVerdict {
    MaliciousActivity,
    FakeCampaign,
    Redirected,
    Parked,
    UnderConstruction,
    Compromised,
    Benign,
}

impl ManualVerdict {
    pub fn parse(s: &str) -> Option<ManualVerdict> {
        Some(match s {
            "malicious_activity" => ManualVerdict::MaliciousActivity,
            "fake_campaign" => ManualVerdict::FakeCampaign,
            "redirected" => ManualVerdict::Redirected,
            "parked" => ManualVerdict::Parked,
            "under_construction" => ManualVerdict::UnderConstruction,
            "compromised" => ManualVerdict::Compromised,
            "benign" => ManualVerdict::Benign,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ManualVerdict::MaliciousActivity => "malicious_activity",
            ManualVerdict::FakeCampaign => "fake_campaign",
            ManualVerdict::Redirected => "redirected",
            ManualVerdict::Parked => "parked",
            ManualVerdict::UnderConstruction => "under_construction",
            ManualVerdict::Compromised => "compromised",
            ManualVerdict::Benign => "benign",
        }
    }
}

/// One observed website.
#[derive(Debug, Clone, PartialEq)]
pub struct WebsiteRecord {
    pub domain: DomainName,
    pub first_seen: NaiveDate,
    pub is_live: bool,
    pub snapshot_id: Option<String>,
    pub whois_id: Option<String>,
    pub manual_verdict: Option<ManualVerdict>,
}

/// Ordered, duplicate-free collection of websites within a campaign window.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<WebsiteRecord>,
    window: (NaiveDate, NaiveDate),
}

impl Dataset {
    pub fn new(records: Vec<WebsiteRecord>, window: (NaiveDate, NaiveDate)) -> Result<Dataset> {
        if window.0 > window.1 {
            return Err(Error::config("window", "start date after end date"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for r in &records {
            if !seen.insert(r.domain.raw().to_string()) {
                return Err(Error::Numeric(format!(
                    "duplicate domain {} in dataset",
                    r.domain.raw()
                )));
            }
            if r.first_seen < window.0 || r.first_seen > window.1 {
                return Err(Error::Numeric(format!(
                    "{} first seen {} outside window",
                    r.domain.raw(),
                    r.first_seen
                )));
            }
        }
        Ok(Dataset { records, window })
    }

    pub fn records(&self) -> &[WebsiteRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn window(&self) -> (NaiveDate, NaiveDate) {
        self.window
    }

    pub fn domains(&self) -> impl Iterator<Item = &DomainName> {
        self.records.iter().map(|r| &r.domain)
    }

    /// Stage-file form: window header plus one row per record.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# window\t{}\t{}\n", self.window.0, self.window.1));
        out.push_str("domain\tfirst_seen\tlive\tverdict\n");
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                r.domain.raw(),
                r.first_seen,
                if r.is_live { 1 } else { 0 },
                r.manual_verdict.map(|v| v.as_str()).unwrap_or("-"),
            ));
        }
        out
    }

    pub fn from_text(text: &str, psl: &PublicSuffixList) -> Result<Dataset> {
        let mut window = None;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# window\t") {
                let cols: Vec<&str> = rest.split('\t').collect();
                if cols.len() == 2 {
                    let start = parse_date(cols[0], "dataset", 1)?;
                    let end = parse_date(cols[1], "dataset", 1)?;
                    window = Some((start, end));
                }
            }
        }
        let window =
            window.ok_or_else(|| Error::config("dataset", "missing `# window` header line"))?;
        let mut records = Vec::new();
        for (line_no, line) in textio::data_lines(text) {
            let cols = textio::split_row(line);
            if cols[0] == "domain" {
                continue;
            }
            if cols.len() < 4 {
                return Err(Error::record("dataset", line_no, "expected 4 columns"));
            }
            let domain = parse_domain_with(&cols[0], psl)?;
            let first_seen = parse_date(&cols[1], "dataset", line_no)?;
            let is_live = cols[2] == "1" || cols[2].eq_ignore_ascii_case("true");
            let manual_verdict = if cols[3] == "-" {
                None
            } else {
                Some(ManualVerdict::parse(&cols[3]).ok_or_else(|| {
                    Error::record("dataset", line_no, format!("bad verdict {:?}", cols[3]))
                })?)
            };
            records.push(WebsiteRecord {
                domain,
                first_seen,
                is_live,
                snapshot_id: None,
                whois_id: None,
                manual_verdict,
            });
        }
        Dataset::new(records, window)
    }
}

pub fn parse_date(s: &str, path: &str, line: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| Error::record(path, line, format!("bad date {s:?} (expected YYYY-MM-DD)")))
}
