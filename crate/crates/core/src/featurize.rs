//! The 34-feature extractors. Lexical features read the registrable part
//! (dots removed, hyphens retained); TLD features read the public suffix and
//! config lists; content features read the fetched landing page; WHOIS
//! features read the recorded WHOIS data. All extractors are pure.

use std::collections::HashSet;
use std::path::PathBuf;

use log::warn;
use url::Url;

use crate::catalog::catalog_default;
use crate::config::ConfigBundle;
use crate::dataset::Dataset;
use crate::domain::{parse_domain_with, DomainName, PublicSuffixList};
use crate::error::Result;
use crate::fetch::{fetch_site_live, LiveOptions};
use crate::matrix::FeatureMatrix;
use crate::snapshot::{
    landing_text, load_fixture_snapshot, load_fixture_whois, SiteSnapshot, WhoisRecord,
};

/// Column span (0-based, inclusive) masked when a site cannot be fetched:
/// the content features f17..f30.
pub const CONTENT_COLS: std::ops::RangeInclusive<usize> = 16..=29;

const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u', 'y'];

fn contains_any(haystack: &str, needles: &[String]) -> bool {
    needles
        .iter()
        .any(|n| !n.is_empty() && haystack.contains(n.as_str()))
}

/// Greedy longest-match segmentation over the alphabetic runs of `lex`,
/// counting consumed dictionary words of length >= 3.
fn dictionary_word_count(lex: &str, dictionary: &[String]) -> usize {
    let words: HashSet<&str> = dictionary
        .iter()
        .filter(|w| w.len() >= 3)
        .map(String::as_str)
        .collect();
    let max_len = words.iter().map(|w| w.len()).max().unwrap_or(0);
    let mut count = 0;
    for run in lex.split(|c: char| !c.is_ascii_alphabetic()) {
        let mut i = 0;
        while i < run.len() {
            let longest = (3..=max_len.min(run.len() - i))
                .rev()
                .find(|&len| words.contains(&run[i..i + len]));
            match longest {
                Some(len) => {
                    count += 1;
                    i += len;
                }
                None => i += 1,
            }
        }
    }
    count
}

/// Lexical features f1..f13.
pub fn extract_lexical(d: &DomainName, cfg: &ConfigBundle) -> [f64; 13] {
    let lex = d.lexical_string();
    let vowel_count = lex.chars().filter(|c| VOWELS.contains(c)).count();
    let word_count = dictionary_word_count(&lex, &cfg.dictionary);
    let unique_chars = lex.chars().collect::<HashSet<_>>().len();
    let letter_count = lex.chars().filter(|c| c.is_ascii_alphabetic()).count();
    let digit_count = lex.chars().filter(|c| c.is_ascii_digit()).count();
    let digit_ratio = if lex.is_empty() {
        0.0
    } else {
        digit_count as f64 / lex.chars().count() as f64
    };
    let hyphen_count = lex.chars().filter(|c| *c == '-').count();
    let b = |v: bool| v as u8 as f64;
    [
        vowel_count as f64,
        word_count as f64,
        unique_chars as f64,
        letter_count as f64,
        digit_ratio,
        hyphen_count as f64,
        b(d.has_punycode_label()),
        b(contains_any(&lex, &cfg.fundraising_keywords)),
        b(contains_any(&lex, &cfg.help_keywords)),
        b(contains_any(&lex, &cfg.cause_keywords)),
        b(contains_any(&lex, &cfg.war_keywords)),
        b(lex.contains("for") || lex.contains("to")),
        b(lex.contains('4') || lex.contains('2')),
    ]
}

/// TLD features f14..f16. Suffixes absent from a config list score 0/false.
pub fn extract_tld(d: &DomainName, cfg: &ConfigBundle) -> [f64; 3] {
    let suffix = d.public_suffix();
    let cheap = cfg.cheap_tlds.iter().any(|t| t == suffix);
    let multi_label = suffix.contains('.');
    let badness = match cfg.spamhaus_scores.get(suffix) {
        Some(score) => *score,
        None => {
            warn!("no badness score for TLD {suffix:?}; defaulting to 0");
            0.0
        }
    };
    [(cheap as u8) as f64, (multi_label as u8) as f64, badness]
}

fn link_host(raw: &str, queried: &DomainName) -> Option<String> {
    let base = Url::parse(&format!("https://{}/", queried.raw())).ok()?;
    let url = Url::parse(raw).or_else(|_| base.join(raw)).ok()?;
    url.host_str().map(str::to_string)
}

fn link_registrable(raw: &str, queried: &DomainName, psl: &PublicSuffixList) -> Option<String> {
    let host = link_host(raw, queried)?;
    parse_domain_with(&host, psl)
        .ok()
        .map(|d| d.registrable_domain())
}

fn host_matches(host: &str, entry: &str) -> bool {
    host == entry || host.ends_with(&format!(".{entry}"))
}

/// Content features f17..f30 for a successfully fetched snapshot.
pub fn extract_content(s: &SiteSnapshot, cfg: &ConfigBundle, psl: &PublicSuffixList) -> [f64; 14] {
    debug_assert!(!s.fetch_status.is_error());
    let b = |v: bool| v as u8 as f64;

    let same_landing = link_host(&s.final_url, &s.domain)
        .and_then(|h| parse_domain_with(&h, psl).ok())
        .map(|d| d.registrable_domain() == s.domain.registrable_domain())
        .unwrap_or(false);

    let externals: Vec<&String> = s.external_links.iter().collect();
    let n_ext = externals.len();
    let lengths: Vec<f64> = externals.iter().map(|l| l.chars().count() as f64).collect();
    let (len_mean, len_std) = if n_ext == 0 {
        (0.0, 0.0)
    } else {
        let mean = lengths.iter().sum::<f64>() / n_ext as f64;
        let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n_ext as f64;
        (mean, var.sqrt())
    };

    let registrables: Vec<Option<String>> = externals
        .iter()
        .map(|l| link_registrable(l, &s.domain, psl))
        .collect();
    let ratio_in = |list: &[String]| -> f64 {
        if n_ext == 0 {
            return 0.0;
        }
        let hits = registrables
            .iter()
            .filter(|r| matches!(r, Some(d) if list.iter().any(|e| e == d)))
            .count();
        hits as f64 / n_ext as f64
    };
    let shortener_ratio = ratio_in(&cfg.shortener_domains);
    let social_ratio = ratio_in(&cfg.social_media_domains);

    let has_form_link = externals.iter().any(|l| {
        link_host(l, &s.domain)
            .map(|h| cfg.form_hosts.iter().any(|e| host_matches(&h, e)))
            .unwrap_or(false)
    });
    let has_paypal = registrables
        .iter()
        .any(|r| matches!(r, Some(d) if cfg.paypal_hosts.iter().any(|e| e == d)));

    let text = landing_text(s).to_ascii_lowercase();
    [
        b(s.ssl_retrievable),
        s.landing_size_kb(),
        b(same_landing),
        s.internal_links.len() as f64,
        n_ext as f64,
        len_mean,
        len_std,
        shortener_ratio,
        social_ratio,
        b(has_form_link),
        b(has_paypal),
        b(contains_any(&text, &cfg.crypto_keywords)),
        b(contains_any(&text, &cfg.bank_keywords)),
        b(contains_any(&text, &cfg.card_keywords)),
    ]
}

/// WHOIS features f31..f34; an absent record yields all zeros.
pub fn extract_whois(w: Option<&WhoisRecord>, d: &DomainName, psl: &PublicSuffixList) -> [f64; 4] {
    let Some(w) = w else {
        return [0.0; 4];
    };
    let own = d.registrable_domain();
    let self_resolving = w.name_servers.iter().any(|ns| {
        parse_domain_with(ns, psl)
            .map(|nsd| nsd.registrable_domain() == own)
            .unwrap_or(false)
    });
    [
        w.registrar.is_some() as u8 as f64,
        (!w.name_servers.is_empty()) as u8 as f64,
        self_resolving as u8 as f64,
        w.name_servers.len() as f64,
    ]
}

/// How snapshots are obtained: recorded fixtures or live HTTP.
#[derive(Debug, Clone)]
pub enum FetchMode {
    Fixture(PathBuf),
    Live(LiveOptions),
}

/// Per-site fetch outcome, recorded for the provenance log.
#[derive(Debug, Clone)]
pub struct FetchOutcome {
    pub domain: String,
    pub status: String,
    pub ssl: bool,
    pub body_bytes: usize,
    pub masked: bool,
}

pub fn provenance_to_text(outcomes: &[FetchOutcome]) -> String {
    let mut out = String::from("domain\tstatus\tssl\tbody_bytes\tmasked\n");
    for o in outcomes {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            o.domain, o.status, o.ssl as u8, o.body_bytes, o.masked as u8
        ));
    }
    out
}

/// Extracts the full feature matrix in dataset order. Fixture errors abort;
/// live fetch failures degrade to rows with the content span masked.
pub fn featurize_all(
    ds: &Dataset,
    cfg: &ConfigBundle,
    mode: &FetchMode,
    psl: &PublicSuffixList,
) -> Result<(FeatureMatrix, Vec<FetchOutcome>)> {
    let catalog = catalog_default();
    let snapshots: Vec<(SiteSnapshot, Option<WhoisRecord>)> = match mode {
        FetchMode::Fixture(dir) => {
            let mut out = Vec::with_capacity(ds.len());
            for record in ds.records() {
                let snap = load_fixture_snapshot(dir, &record.domain, psl)?;
                let whois = load_fixture_whois(dir, &record.domain)?;
                out.push((snap, whois));
            }
            out
        }
        FetchMode::Live(opts) => fetch_site_live(ds, opts, psl),
    };

    let mut domains = Vec::with_capacity(ds.len());
    let mut rows = Vec::with_capacity(ds.len());
    let mut mask = Vec::with_capacity(ds.len());
    let mut provenance = Vec::with_capacity(ds.len());
    for (record, (snap, whois)) in ds.records().iter().zip(&snapshots) {
        let mut row = Vec::with_capacity(catalog.len());
        row.extend(extract_lexical(&record.domain, cfg));
        row.extend(extract_tld(&record.domain, cfg));
        let mut row_mask = vec![false; catalog.len()];
        if snap.fetch_status.is_error() {
            row.extend([0.0; 14]);
            for c in CONTENT_COLS {
                row_mask[c] = true;
            }
        } else {
            row.extend(extract_content(snap, cfg, psl));
        }
        row.extend(extract_whois(whois.as_ref(), &record.domain, psl));
        provenance.push(FetchOutcome {
            domain: record.domain.raw().to_string(),
            status: snap.fetch_status.as_str(),
            ssl: snap.ssl_retrievable,
            body_bytes: snap.landing_body.len(),
            masked: snap.fetch_status.is_error(),
        });
        domains.push(record.domain.raw().to_string());
        rows.push(row);
        mask.push(row_mask);
    }
    let matrix = FeatureMatrix::new(catalog, domains, rows, mask)?;
    Ok((matrix, provenance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::parse_domain;
    use crate::intel::IntelStage;
    use crate::snapshot::{snapshot_from_body, FetchStatus};

    fn cfg() -> ConfigBundle {
        ConfigBundle::default()
    }

    fn psl() -> &'static PublicSuffixList {
        PublicSuffixList::bundled()
    }

    #[test]
    fn lexical_hand_counts_donate4ukraine() {
        let d = parse_domain("donate4ukraine.com").unwrap();
        let f = extract_lexical(&d, &cfg());
        assert_eq!(f[0], 7.0); // vowels o,a,e,u,a,i,e
        assert_eq!(f[3], 13.0); // letters
        assert_eq!(f[4], 1.0 / 14.0); // one digit over 14 chars
        assert_eq!(f[5], 0.0); // no hyphen
        assert_eq!(f[7], 1.0); // "donate" is a fundraising keyword
        assert_eq!(f[10], 0.0); // no war keyword
        assert_eq!(f[12], 1.0); // digit 4
    }

    #[test]
    fn lexical_punycode_and_help() {
        let d = parse_domain("xn--80ak6aa92e.com").unwrap();
        assert_eq!(extract_lexical(&d, &cfg())[6], 1.0);
        let d = parse_domain("help-ukraine.org").unwrap();
        let f = extract_lexical(&d, &cfg());
        assert_eq!(f[5], 1.0); // hyphen
        assert_eq!(f[8], 1.0); // "help"
    }

    #[test]
    fn lexical_substring_semantics() {
        // "free" matches inside "freedom" by design
        let d = parse_domain("ukrainefreedomwatch.me").unwrap();
        assert_eq!(extract_lexical(&d, &cfg())[10], 1.0);
        // "to" inside "today"
        let d = parse_domain("supportukrainetoday.net").unwrap();
        assert_eq!(extract_lexical(&d, &cfg())[11], 1.0);
    }

    #[test]
    fn dictionary_greedy_segmentation() {
        let dict = cfg().dictionary;
        assert_eq!(dictionary_word_count("donate4ukraine", &dict), 2);
        assert_eq!(dictionary_word_count("savethechildrenofukraine", &dict), 4);
        assert_eq!(dictionary_word_count("xn--ukraine-6of", &dict), 1);
        assert_eq!(dictionary_word_count("zzqqj", &dict), 0);
    }

    #[test]
    fn tld_features() {
        let c = cfg();
        let d = parse_domain("a.pp.ua").unwrap();
        let f = extract_tld(&d, &c);
        assert_eq!(f[1], 1.0); // two-label suffix
        assert_eq!(f[0], 1.0); // pp.ua is in the cheap list
        assert_eq!(f[2], 0.38);
        let d = parse_domain("a.com").unwrap();
        let f = extract_tld(&d, &c);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[2], 0.11);
    }

    fn snap_with(domain: &str, body: &str, final_url: &str, ssl: bool) -> SiteSnapshot {
        snapshot_from_body(
            parse_domain(domain).unwrap(),
            body.as_bytes().to_vec(),
            final_url.to_string(),
            ssl,
            FetchStatus::Ok,
            IntelStage::Fes,
            psl(),
        )
    }

    #[test]
    fn content_link_stats() {
        let body = r#"<a href="/a">i</a><a href="https://bit.ly/x">s</a><a href="https://other.com/long/path">e</a>"#;
        let s = snap_with("a.com", body, "https://a.com/", true);
        let f = extract_content(&s, &cfg(), psl());
        assert_eq!(f[0], 1.0); // ssl
        assert_eq!(f[2], 1.0); // same landing domain
        assert_eq!(f[3], 1.0); // one internal
        assert_eq!(f[4], 2.0); // two external
        assert_eq!(f[7], 0.5); // bit.ly is a shortener
                               // mean/std of lengths {16, 27}
        assert_eq!(f[5], 21.5);
        assert_eq!(f[6], 5.5);
    }

    #[test]
    fn content_empty_externals_conventions() {
        let s = snap_with("a.com", "<p>hello</p>", "https://a.com/", false);
        let f = extract_content(&s, &cfg(), psl());
        assert_eq!(f[4], 0.0);
        assert_eq!(f[5], 0.0);
        assert_eq!(f[6], 0.0);
        assert_eq!(f[7], 0.0);
        assert_eq!(f[8], 0.0);
    }

    #[test]
    fn content_tokens_and_paypal() {
        let body =
            r#"<p>Donate BTC to our wallet</p><a href="https://www.paypal.com/donate">p</a>"#;
        let s = snap_with("a.com", body, "https://a.com/", true);
        let f = extract_content(&s, &cfg(), psl());
        assert_eq!(f[10], 1.0); // paypal
        assert_eq!(f[11], 1.0); // btc
    }

    #[test]
    fn content_redirected_landing() {
        let s = snap_with("a.com", "", "https://elsewhere.net/", true);
        let f = extract_content(&s, &cfg(), psl());
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn empty_keyword_config_vacuously_matches_nothing() {
        let mut empty = cfg();
        empty.fundraising_keywords.clear();
        empty.help_keywords.clear();
        empty.cause_keywords.clear();
        empty.war_keywords.clear();
        let d = parse_domain("donatewarhelpart.com").unwrap();
        let f = extract_lexical(&d, &empty);
        assert_eq!(&f[7..11], &[0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn content_invariants_on_random_link_sets() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let externals =
            prop::collection::vec("https://[a-z]{3,10}\\.(org|net|ly)/[a-z]{0,12}", 0..6);
        runner
            .run(
                &(externals, prop::collection::vec("/[a-z]{1,8}", 0..5)),
                |(ext, int)| {
                    let mut body = String::new();
                    for href in ext.iter().chain(int.iter()) {
                        body.push_str(&format!("<a href=\"{href}\">x</a> "));
                    }
                    let s = snap_with("a.com", &body, "https://a.com/", true);
                    let f = extract_content(&s, &cfg(), psl());
                    // f22 = 0 iff f21 = 0; ratios stay in [0,1]; size nonnegative
                    prop_assert_eq!(f[5] == 0.0, f[4] == 0.0);
                    prop_assert!((0.0..=1.0).contains(&f[7]));
                    prop_assert!((0.0..=1.0).contains(&f[8]));
                    prop_assert!(f[1] >= 0.0);
                    // every extracted link is internal xor external
                    prop_assert!(s.internal_links.intersection(&s.external_links).count() == 0);
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn whois_features() {
        let d = parse_domain("example.org").unwrap();
        assert_eq!(extract_whois(None, &d, psl()), [0.0, 0.0, 0.0, 0.0]);
        let w = WhoisRecord {
            domain: d.clone(),
            registrar: Some("Example Registrar".into()),
            name_servers: vec![
                "ns1.example.org".into(),
                "ns2.dns-host.com".into(),
                "ns3.dns-host.com".into(),
            ],
        };
        let f = extract_whois(Some(&w), &d, psl());
        assert_eq!(f, [1.0, 1.0, 1.0, 3.0]);
    }
}
