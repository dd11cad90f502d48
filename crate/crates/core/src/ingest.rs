//! Loading, filtering and deduplicating domain lists, plus the
//! registration-trend series.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use log::warn;

use crate::dataset::{parse_date, Dataset, ManualVerdict, WebsiteRecord};
use crate::domain::{parse_domain_with, PublicSuffixList};
use crate::error::{Error, Result};
use crate::textio;

/// Row filter applied at load time: keywords OR-matched as substrings of the
/// registrable part, and a closed date window.
#[derive(Debug, Clone)]
pub struct IngestFilter {
    pub required_keywords: Vec<String>,
    pub window: (NaiveDate, NaiveDate),
}

impl IngestFilter {
    pub fn new(keywords: Vec<String>, window: (NaiveDate, NaiveDate)) -> Result<IngestFilter> {
        if window.0 > window.1 {
            return Err(Error::config("window", "start date after end date"));
        }
        let required_keywords = keywords
            .into_iter()
            .map(|k| k.to_ascii_lowercase())
            .collect();
        Ok(IngestFilter {
            required_keywords,
            window,
        })
    }

    fn matches(&self, registrable_part: &str, first_seen: NaiveDate) -> bool {
        if first_seen < self.window.0 || first_seen > self.window.1 {
            return false;
        }
        self.required_keywords.is_empty()
            || self
                .required_keywords
                .iter()
                .any(|k| registrable_part.contains(k.as_str()))
    }
}

/// Loads a `domain, first_seen[, live[, verdict]]` table, applies the filter,
/// deduplicates keeping the earliest first_seen, and sorts rows by
/// (first_seen, domain). The result is independent of the input row order.
pub fn load_domains(path: &Path, filter: &IngestFilter, psl: &PublicSuffixList) -> Result<Dataset> {
    let text = textio::read_to_string(path)?;
    load_domains_from_text(&text, path, filter, psl)
}

pub fn load_domains_from_text(
    text: &str,
    path: &Path,
    filter: &IngestFilter,
    psl: &PublicSuffixList,
) -> Result<Dataset> {
    // earliest record per domain
    let mut by_domain: BTreeMap<String, WebsiteRecord> = BTreeMap::new();
    for (line_no, line) in textio::data_lines(text) {
        let cols = textio::split_row(line);
        if line_no == 1 && cols[0].eq_ignore_ascii_case("domain") {
            continue;
        }
        if cols.len() < 2 {
            return Err(Error::record(
                path,
                line_no,
                "expected at least `domain, first_seen`",
            ));
        }
        let domain = parse_domain_with(&cols[0], psl)
            .map_err(|e| Error::record(path, line_no, e.to_string()))?;
        let first_seen = parse_date(&cols[1], &path.display().to_string(), line_no)?;
        let is_live = match cols.get(2).map(String::as_str) {
            None | Some("") | Some("-") => true,
            Some(v) => v == "1" || v.eq_ignore_ascii_case("true"),
        };
        let manual_verdict = match cols.get(3).map(String::as_str) {
            None | Some("") | Some("-") => None,
            Some(v) => Some(
                ManualVerdict::parse(v)
                    .ok_or_else(|| Error::record(path, line_no, format!("bad verdict {v:?}")))?,
            ),
        };
        if !filter.matches(domain.registrable_part(), first_seen) {
            continue;
        }
        let record = WebsiteRecord {
            domain,
            first_seen,
            is_live,
            snapshot_id: None,
            whois_id: None,
            manual_verdict,
        };
        by_domain
            .entry(record.domain.raw().to_string())
            .and_modify(|existing| {
                if record.first_seen < existing.first_seen {
                    *existing = record.clone();
                }
            })
            .or_insert(record);
    }
    let mut records: Vec<WebsiteRecord> = by_domain.into_values().collect();
    records.sort_by(|a, b| (a.first_seen, a.domain.raw()).cmp(&(b.first_seen, b.domain.raw())));
    if records.is_empty() {
        warn!("ingest produced an empty dataset from {}", path.display());
    }
    Dataset::new(records, filter.window)
}

/// Daily counts of first-seen records, zero-filled over the whole window.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationSeries {
    pub points: Vec<(NaiveDate, usize)>,
}

impl RegistrationSeries {
    pub fn total(&self) -> usize {
        self.points.iter().map(|(_, c)| c).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("date\tcount\n");
        for (date, count) in &self.points {
            out.push_str(&format!("{date}\t{count}\n"));
        }
        out
    }
}

pub fn registration_trend(ds: &Dataset) -> RegistrationSeries {
    let mut counts: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    let (start, end) = ds.window();
    let mut day = start;
    while day <= end {
        counts.insert(day, 0);
        day = day.succ_opt().expect("date overflow");
    }
    for r in ds.records() {
        *counts.entry(r.first_seen).or_insert(0) += 1;
    }
    RegistrationSeries {
        points: counts.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PublicSuffixList;
    use proptest::prelude::*;

    fn filter() -> IngestFilter {
        IngestFilter::new(
            vec!["ukraine".into(), "ukrainian".into()],
            ("2022-02-25".parse().unwrap(), "2022-07-25".parse().unwrap()),
        )
        .unwrap()
    }

    fn load(text: &str) -> Dataset {
        load_domains_from_text(
            text,
            Path::new("test.tsv"),
            &filter(),
            PublicSuffixList::bundled(),
        )
        .unwrap()
    }

    #[test]
    fn dedup_keeps_earliest() {
        let ds = load("ukrainehelp.org\t2022-03-05\nukrainehelp.org\t2022-03-01\n");
        assert_eq!(ds.len(), 1);
        assert_eq!(
            ds.records()[0].first_seen,
            "2022-03-01".parse::<NaiveDate>().unwrap()
        );
    }

    #[test]
    fn keyword_and_window_filters() {
        let ds = load(
            "weather.com\t2022-03-01\n\
             standwithukraine.live\t2022-08-01\n\
             helpukraine.org\t2022-03-02\n",
        );
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.records()[0].domain.raw(), "helpukraine.org");
    }

    #[test]
    fn unparsable_row_reports_line_number() {
        let err = load_domains_from_text(
            "ukraineaid.org\t2022-03-01\nbad row without date\n",
            Path::new("in.tsv"),
            &filter(),
            PublicSuffixList::bundled(),
        )
        .unwrap_err();
        assert!(err.to_string().contains(":2"), "{err}");
    }

    #[test]
    fn csv_rows_accepted() {
        let ds = load("ukraineaid.org,2022-03-01\n");
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn trend_zero_fills_days() {
        let ds = load("aukraine.com\t2022-03-01\nbukraine.com\t2022-03-03\n");
        let trend = registration_trend(&ds);
        assert_eq!(trend.total(), ds.len());
        // full window, zero-filled
        assert_eq!(trend.points.len(), 151);
        let lookup: BTreeMap<_, _> = trend.points.iter().cloned().collect();
        let gap: NaiveDate = "2022-03-02".parse().unwrap();
        assert_eq!(lookup[&gap], 0);
    }

    proptest! {
        /// dedup keeps exactly one record per domain and is order-independent
        #[test]
        fn dedup_and_order_independence(
            mut rows in prop::collection::vec(
                (prop::sample::select(vec!["aukraine.com", "bukraine.org", "cukraine.live"]),
                 1u32..120),
                1..20,
            )
        ) {
            let text = |rows: &[(&str, u32)]| {
                rows.iter()
                    .map(|(d, day)| {
                        let date = NaiveDate::from_ymd_opt(2022, 3, 1).unwrap()
                            + chrono::Days::new(*day as u64 % 60);
                        format!("{d}\t{date}")
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            let forward = load(&text(&rows));
            rows.reverse();
            let reversed = load(&text(&rows));
            prop_assert_eq!(&forward, &reversed);
            let mut domains: Vec<&str> =
                forward.records().iter().map(|r| r.domain.raw()).collect();
            domains.dedup();
            prop_assert_eq!(domains.len(), forward.len());
        }
    }
}
