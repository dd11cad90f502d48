//! Recorded third-party intelligence snapshots and the maliciousness rule
//! applied to them. Snapshots are line-delimited `key=value` records taken at
//! two observation stages (intel-query stage and feature-extraction stage).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::textio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IntelStage {
    Iqs,
    Fes,
}

impl IntelStage {
    pub fn parse(s: &str) -> Option<IntelStage> {
        match s {
            "IQS" => Some(IntelStage::Iqs),
            "FES" => Some(IntelStage::Fes),
            _ => None,
        }
    }
}

impl fmt::Display for IntelStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntelStage::Iqs => "IQS",
            IntelStage::Fes => "FES",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtStatus {
    Malicious,
    Suspicious,
    Clean,
    NotFound,
}

impl VtStatus {
    pub fn parse(s: &str) -> Option<VtStatus> {
        Some(match s {
            "malicious" => VtStatus::Malicious,
            "suspicious" => VtStatus::Suspicious,
            "clean" => VtStatus::Clean,
            "not_found" => VtStatus::NotFound,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            VtStatus::Malicious => "malicious",
            VtStatus::Suspicious => "suspicious",
            VtStatus::Clean => "clean",
            VtStatus::NotFound => "not_found",
        }
    }
}

/// One intel snapshot line for one domain at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct IntelRecord {
    pub domain: String,
    pub source: String,
    pub stage: IntelStage,
    pub spamming: bool,
    pub malware: bool,
    pub phishing: bool,
    pub suspicious: bool,
    pub parking: bool,
    pub risk_score: u8,
    pub vt_status: Option<VtStatus>,
}

impl IntelRecord {
    /// Line form, bit-exact:
    /// `domain=<d> source=<s> stage=<IQS|FES> spamming=<0|1> malware=<0|1>
    ///  phishing=<0|1> suspicious=<0|1> parking=<0|1> risk=<0..100>
    ///  [vt=<malicious|suspicious|clean|not_found>]`
    pub fn to_line(&self) -> String {
        let mut line = format!(
            "domain={} source={} stage={} spamming={} malware={} phishing={} suspicious={} parking={} risk={}",
            self.domain,
            self.source,
            self.stage,
            self.spamming as u8,
            self.malware as u8,
            self.phishing as u8,
            self.suspicious as u8,
            self.parking as u8,
            self.risk_score,
        );
        if let Some(vt) = self.vt_status {
            line.push_str(&format!(" vt={}", vt.as_str()));
        }
        line
    }

    pub fn parse_line(line: &str, path: &Path, line_no: usize) -> Result<IntelRecord> {
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for token in line.split_whitespace() {
            let (k, v) = token.split_once('=').ok_or_else(|| {
                Error::record(path, line_no, format!("expected key=value, got {token:?}"))
            })?;
            fields.insert(k, v);
        }
        let take = |key: &str| -> Result<&str> {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| Error::record(path, line_no, format!("missing field {key:?}")))
        };
        let flag = |key: &str| -> Result<bool> {
            match fields.get(key).copied() {
                None | Some("0") => Ok(false),
                Some("1") => Ok(true),
                Some(v) => Err(Error::record(
                    path,
                    line_no,
                    format!("field {key} must be 0 or 1, got {v:?}"),
                )),
            }
        };
        let domain = take("domain")?.to_ascii_lowercase();
        let stage_str = take("stage")?;
        let stage = IntelStage::parse(stage_str)
            .ok_or_else(|| Error::record(path, line_no, format!("bad stage {stage_str:?}")))?;
        let risk_str = take("risk")?;
        let risk: i64 = risk_str
            .parse()
            .map_err(|_| Error::record(path, line_no, format!("bad risk {risk_str:?}")))?;
        if !(0..=100).contains(&risk) {
            return Err(Error::record(
                path,
                line_no,
                format!("risk {risk} outside 0..100"),
            ));
        }
        let vt_status = match fields.get("vt") {
            None => None,
            Some(v) => Some(
                VtStatus::parse(v)
                    .ok_or_else(|| Error::record(path, line_no, format!("bad vt status {v:?}")))?,
            ),
        };
        Ok(IntelRecord {
            domain,
            source: fields.get("source").copied().unwrap_or("ipqs").to_string(),
            stage,
            spamming: flag("spamming")?,
            malware: flag("malware")?,
            phishing: flag("phishing")?,
            suspicious: flag("suspicious")?,
            parking: flag("parking")?,
            risk_score: risk as u8,
            vt_status,
        })
    }

    pub fn any_threat_flag(&self) -> bool {
        self.spamming || self.malware || self.phishing || self.suspicious
    }
}

/// Loads a line-delimited intel snapshot. Records keep file order; one domain
/// may appear once per stage and source, and records are never merged.
/// Domains absent from the dataset are retained and joined later.
pub fn load_intel(path: &Path) -> Result<Vec<IntelRecord>> {
    let text = textio::read_to_string(path)?;
    load_intel_from_text(&text, path)
}

pub fn load_intel_from_text(text: &str, path: &Path) -> Result<Vec<IntelRecord>> {
    textio::data_lines(text)
        .map(|(line_no, line)| IntelRecord::parse_line(line, path, line_no))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Malicious,
    Benign,
    Unknown,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Malicious => "malicious",
            Verdict::Benign => "benign",
            Verdict::Unknown => "unknown",
        }
    }
}

/// Per-domain verdict joined against intel records.
#[derive(Debug, Clone, PartialEq)]
pub struct IntelVerdict {
    pub domain: String,
    pub verdict: Verdict,
}

/// The maliciousness rule: malicious iff at least one threat flag is set and
/// the risk score reaches the threshold (default 75).
pub fn classify_intel(record: &IntelRecord, threshold: u8) -> Verdict {
    if record.any_threat_flag() && record.risk_score >= threshold {
        Verdict::Malicious
    } else {
        Verdict::Benign
    }
}

/// Collapses multi-record intel into one verdict per domain: malicious when
/// any record classifies malicious, benign when records exist but none do,
/// unknown only for domains with no intel at all.
pub fn domain_verdicts(
    records: &[IntelRecord],
    domains: &[String],
    threshold: u8,
) -> Vec<IntelVerdict> {
    let mut by_domain: BTreeMap<&str, Verdict> = BTreeMap::new();
    for r in records {
        let v = classify_intel(r, threshold);
        by_domain
            .entry(r.domain.as_str())
            .and_modify(|cur| {
                if v == Verdict::Malicious {
                    *cur = Verdict::Malicious;
                }
            })
            .or_insert(v);
    }
    domains
        .iter()
        .map(|d| IntelVerdict {
            domain: d.clone(),
            verdict: *by_domain.get(d.as_str()).unwrap_or(&Verdict::Unknown),
        })
        .collect()
}
