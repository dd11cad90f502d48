//! Pipeline configuration: keyword lists, TLD/host lists, thresholds and the
//! master seed. Serializes to flat `key = value` text with list-valued keys
//! repeated one item per line; defaults round-trip byte-identically.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::Path;

use crate::error::{Error, Result};
use crate::textio;

pub const DEFAULT_SEED: u64 = 40;
pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.6;
pub const DEFAULT_K_RANGE: RangeInclusive<usize> = 2..=10;
pub const DEFAULT_INTEL_RISK_THRESHOLD: u8 = 75;

pub const FUNDRAISING_KEYWORDS: &[&str] = &[
    "money", "donate", "pay", "coin", "cash", "charity", "buy", "fund", "dollar",
];
pub const HELP_KEYWORDS: &[&str] = &["help", "assist", "stand", "support", "aid", "save", "unite"];
pub const CAUSE_KEYWORDS: &[&str] = &["art", "concert", "pray", "care", "build", "hope", "food"];
pub const WAR_KEYWORDS: &[&str] = &[
    "war", "free", "fight", "tank", "weapon", "drone", "hero", "arm", "victory", "bullet", "gun",
];
pub const CRYPTO_KEYWORDS: &[&str] = &[
    "crypto",
    "block",
    "chain",
    "blockchain",
    "wallet",
    "nft",
    "coin",
    "thereum",
    "bitcoin",
    "altcoin",
    "btcc",
    "trx",
    "doge",
    "solana",
    "cardano",
    "usdc",
    "xrp",
    "tether",
    "usdt",
    "eth",
    "sol",
    "btc",
];
pub const BANK_KEYWORDS: &[&str] = &[
    "bank", "banking", "monobank", "account", "acc", "accnt", "branch", "routing", "rout",
];
pub const CARD_KEYWORDS: &[&str] = &[
    "creditcard",
    "credit",
    "card",
    "mastercard",
    "debit",
    "visa",
    "cards",
    "kreditkarte",
    "kredit",
    "karte",
];

const BUNDLED_CHEAP_TLDS: &str = include_str!("../data/cheap_tlds.txt");
const BUNDLED_SPAMHAUS: &str = include_str!("../data/spamhaus_scores.txt");
const BUNDLED_SHORTENERS: &str = include_str!("../data/url_shorteners.txt");
const BUNDLED_SOCIAL: &str = include_str!("../data/social_media.txt");
const BUNDLED_FORM_HOSTS: &str = include_str!("../data/form_hosts.txt");
const BUNDLED_PAYPAL: &str = include_str!("../data/paypal_hosts.txt");
const BUNDLED_DICTIONARY: &str = include_str!("../data/english_words.txt");

/// Everything feature extraction and clustering read from configuration.
/// All lists are lowercase and deduplicated; order is sorted for
/// deterministic serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigBundle {
    pub fundraising_keywords: Vec<String>,
    pub help_keywords: Vec<String>,
    pub cause_keywords: Vec<String>,
    pub war_keywords: Vec<String>,
    pub crypto_keywords: Vec<String>,
    pub bank_keywords: Vec<String>,
    pub card_keywords: Vec<String>,
    pub cheap_tlds: Vec<String>,
    pub spamhaus_scores: BTreeMap<String, f64>,
    pub shortener_domains: Vec<String>,
    pub social_media_domains: Vec<String>,
    pub form_hosts: Vec<String>,
    pub paypal_hosts: Vec<String>,
    pub dictionary: Vec<String>,
    pub correlation_threshold: f64,
    pub k_range: RangeInclusive<usize>,
    pub intel_risk_threshold: u8,
    pub seed: u64,
}

fn parse_word_list(text: &str) -> Vec<String> {
    let mut words: Vec<String> = text
        .lines()
        .map(|l| l.trim().to_ascii_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    words.sort();
    words.dedup();
    words
}

fn parse_score_table(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut table = BTreeMap::new();
    for (line_no, line) in textio::data_lines(text) {
        let mut parts = line.split_whitespace();
        let (Some(tld), Some(score)) = (parts.next(), parts.next()) else {
            return Err(Error::config(
                "list.spamhaus",
                format!("line {line_no}: expected `tld score`"),
            ));
        };
        let score: f64 = score.parse().map_err(|_| {
            Error::config(
                "list.spamhaus",
                format!("line {line_no}: bad score {score:?}"),
            )
        })?;
        table.insert(tld.to_ascii_lowercase(), score);
    }
    Ok(table)
}

fn default_keywords(list: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = list.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

impl Default for ConfigBundle {
    fn default() -> Self {
        ConfigBundle {
            fundraising_keywords: default_keywords(FUNDRAISING_KEYWORDS),
            help_keywords: default_keywords(HELP_KEYWORDS),
            cause_keywords: default_keywords(CAUSE_KEYWORDS),
            war_keywords: default_keywords(WAR_KEYWORDS),
            crypto_keywords: default_keywords(CRYPTO_KEYWORDS),
            bank_keywords: default_keywords(BANK_KEYWORDS),
            card_keywords: default_keywords(CARD_KEYWORDS),
            cheap_tlds: parse_word_list(BUNDLED_CHEAP_TLDS),
            spamhaus_scores: parse_score_table(BUNDLED_SPAMHAUS).expect("bundled table parses"),
            shortener_domains: parse_word_list(BUNDLED_SHORTENERS),
            social_media_domains: parse_word_list(BUNDLED_SOCIAL),
            form_hosts: parse_word_list(BUNDLED_FORM_HOSTS),
            paypal_hosts: parse_word_list(BUNDLED_PAYPAL),
            dictionary: parse_word_list(BUNDLED_DICTIONARY),
            correlation_threshold: DEFAULT_CORRELATION_THRESHOLD,
            k_range: DEFAULT_K_RANGE,
            intel_risk_threshold: DEFAULT_INTEL_RISK_THRESHOLD,
            seed: DEFAULT_SEED,
        }
    }
}

impl ConfigBundle {
    pub fn validate(&self) -> Result<()> {
        if !(self.correlation_threshold > 0.0 && self.correlation_threshold < 1.0) {
            return Err(Error::config(
                "correlation_threshold",
                "must be inside (0, 1)",
            ));
        }
        if self.k_range.is_empty() || *self.k_range.start() < 2 {
            return Err(Error::config("k_range", "must be nonempty with min >= 2"));
        }
        if self.intel_risk_threshold > 100 {
            return Err(Error::config("intel_risk_threshold", "must be in 0..100"));
        }
        let lists: [(&str, &[String]); 12] = [
            ("keyword.fundraising", &self.fundraising_keywords),
            ("keyword.help", &self.help_keywords),
            ("keyword.cause", &self.cause_keywords),
            ("keyword.war", &self.war_keywords),
            ("keyword.crypto", &self.crypto_keywords),
            ("keyword.bank", &self.bank_keywords),
            ("keyword.card", &self.card_keywords),
            ("list.cheap_tlds", &self.cheap_tlds),
            ("list.shorteners", &self.shortener_domains),
            ("list.social_media", &self.social_media_domains),
            ("list.form_hosts", &self.form_hosts),
            ("list.paypal_hosts", &self.paypal_hosts),
        ];
        for (key, list) in lists {
            if list.iter().any(|w| *w != w.to_ascii_lowercase()) {
                return Err(Error::config(key, "entries must be lowercase"));
            }
        }
        Ok(())
    }

    /// Serializes to flat `key = value` text. List keys repeat, one item per
    /// line; the output is canonical so defaults round-trip byte-identically.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &str| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        };
        kv("seed", &self.seed.to_string());
        kv(
            "correlation_threshold",
            &textio::fmt_f64(self.correlation_threshold),
        );
        kv(
            "k_range",
            &format!("{}..{}", self.k_range.start(), self.k_range.end()),
        );
        kv(
            "intel_risk_threshold",
            &self.intel_risk_threshold.to_string(),
        );
        let lists: [(&str, &[String]); 13] = [
            ("keyword.fundraising", &self.fundraising_keywords),
            ("keyword.help", &self.help_keywords),
            ("keyword.cause", &self.cause_keywords),
            ("keyword.war", &self.war_keywords),
            ("keyword.crypto", &self.crypto_keywords),
            ("keyword.bank", &self.bank_keywords),
            ("keyword.card", &self.card_keywords),
            ("list.cheap_tlds", &self.cheap_tlds),
            ("list.shorteners", &self.shortener_domains),
            ("list.social_media", &self.social_media_domains),
            ("list.form_hosts", &self.form_hosts),
            ("list.paypal_hosts", &self.paypal_hosts),
            ("list.dictionary", &self.dictionary),
        ];
        for (key, list) in lists {
            for item in list {
                kv(key, item);
            }
        }
        for (tld, score) in &self.spamhaus_scores {
            kv(
                "score.spamhaus",
                &format!("{tld} {}", textio::fmt_f64(*score)),
            );
        }
        out
    }

    /// Parses the flat key-value format produced by [`Self::to_text`].
    /// Unknown keys are rejected so typos fail loudly. `*.file` variants load
    /// a list from a plain-text file (one item per line, `#` comments).
    pub fn from_text(text: &str, base_dir: &Path) -> Result<ConfigBundle> {
        let mut cfg = ConfigBundle::default();
        let mut seen_list_keys: Vec<String> = Vec::new();

        for (line_no, line) in textio::data_lines(text) {
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    format!("line {line_no}"),
                    "expected `key = value`",
                ));
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| Error::config(key, "expected unsigned integer"))?;
                }
                "correlation_threshold" => {
                    cfg.correlation_threshold = value
                        .parse()
                        .map_err(|_| Error::config(key, "expected float"))?;
                }
                "k_range" => {
                    cfg.k_range = parse_k_range(value)?;
                }
                "intel_risk_threshold" => {
                    cfg.intel_risk_threshold = value
                        .parse()
                        .map_err(|_| Error::config(key, "expected integer in 0..100"))?;
                }
                _ => {
                    let (list_key, from_file) = match key.strip_suffix(".file") {
                        Some(base) => (base, true),
                        None => (key, false),
                    };
                    let items: Vec<String> = if from_file {
                        let path = base_dir.join(value);
                        parse_word_list(&textio::read_to_string(&path)?)
                    } else {
                        vec![value.to_ascii_lowercase()]
                    };
                    if list_key == "score.spamhaus" {
                        if !seen_list_keys.iter().any(|k| k == list_key) {
                            cfg.spamhaus_scores.clear();
                        }
                        for item in &items {
                            let table = parse_score_table(item)?;
                            cfg.spamhaus_scores.extend(table);
                        }
                    } else {
                        let target = list_field(&mut cfg, list_key)
                            .ok_or_else(|| Error::config(key, "unknown config key"))?;
                        // first occurrence of a list key replaces the default
                        if !seen_list_keys.iter().any(|k| k == list_key) {
                            target.clear();
                        }
                        target.extend(items);
                    }
                    seen_list_keys.push(list_key.to_string());
                }
            }
        }
        for (_, list) in list_fields(&mut cfg) {
            list.sort();
            list.dedup();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<ConfigBundle> {
        let text = textio::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        ConfigBundle::from_text(&text, base)
    }

    /// sha-256 over the canonical serialization; recorded in run manifests.
    pub fn content_hash(&self) -> String {
        textio::sha256_hex(self.to_text().as_bytes())
    }
}

pub fn parse_k_range(value: &str) -> Result<RangeInclusive<usize>> {
    let (lo, hi) = value
        .split_once("..")
        .ok_or_else(|| Error::config("k_range", "expected `lo..hi`"))?;
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|_| Error::config("k_range", "bad lower bound"))?;
    let hi: usize = hi
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|_| Error::config("k_range", "bad upper bound"))?;
    if lo < 2 || hi < lo {
        return Err(Error::config("k_range", "need 2 <= lo <= hi"));
    }
    Ok(lo..=hi)
}

fn list_field<'a>(cfg: &'a mut ConfigBundle, key: &str) -> Option<&'a mut Vec<String>> {
    Some(match key {
        "keyword.fundraising" => &mut cfg.fundraising_keywords,
        "keyword.help" => &mut cfg.help_keywords,
        "keyword.cause" => &mut cfg.cause_keywords,
        "keyword.war" => &mut cfg.war_keywords,
        "keyword.crypto" => &mut cfg.crypto_keywords,
        "keyword.bank" => &mut cfg.bank_keywords,
        "keyword.card" => &mut cfg.card_keywords,
        "list.cheap_tlds" => &mut cfg.cheap_tlds,
        "list.shorteners" => &mut cfg.shortener_domains,
        "list.social_media" => &mut cfg.social_media_domains,
        "list.form_hosts" => &mut cfg.form_hosts,
        "list.paypal_hosts" => &mut cfg.paypal_hosts,
        "list.dictionary" => &mut cfg.dictionary,
        _ => return None,
    })
}

fn list_fields(cfg: &mut ConfigBundle) -> Vec<(&'static str, &mut Vec<String>)> {
    vec![
        ("keyword.fundraising", &mut cfg.fundraising_keywords),
        ("keyword.help", &mut cfg.help_keywords),
        ("keyword.cause", &mut cfg.cause_keywords),
        ("keyword.war", &mut cfg.war_keywords),
        ("keyword.crypto", &mut cfg.crypto_keywords),
        ("keyword.bank", &mut cfg.bank_keywords),
        ("keyword.card", &mut cfg.card_keywords),
        ("list.cheap_tlds", &mut cfg.cheap_tlds),
        ("list.shorteners", &mut cfg.shortener_domains),
        ("list.social_media", &mut cfg.social_media_domains),
        ("list.form_hosts", &mut cfg.form_hosts),
        ("list.paypal_hosts", &mut cfg.paypal_hosts),
        ("list.dictionary", &mut cfg.dictionary),
    ]
}
