//! Domain-name parsing against a bundled public-suffix snapshot.
//!
//! A parsed [`DomainName`] splits a raw domain into DNS labels, the matched
//! public suffix (longest match wins) and the registrable part (everything
//! left of the suffix). Lexical features operate on the registrable part;
//! link classification and WHOIS self-resolution compare the narrower
//! eTLD+1 form returned by [`DomainName::registrable_domain`].

use std::collections::BTreeSet;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const BUNDLED_SUFFIXES: &str = include_str!("../data/public_suffix.dat");

/// Public-suffix snapshot: a set of known suffixes, matched longest-first.
#[derive(Debug, Clone)]
pub struct PublicSuffixList {
    suffixes: BTreeSet<String>,
}

impl PublicSuffixList {
    pub fn from_text(text: &str) -> Self {
        let suffixes = text
            .lines()
            .map(|l| l.trim().to_ascii_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        PublicSuffixList { suffixes }
    }

    /// The snapshot bundled with the binary.
    pub fn bundled() -> &'static PublicSuffixList {
        static LIST: OnceLock<PublicSuffixList> = OnceLock::new();
        LIST.get_or_init(|| PublicSuffixList::from_text(BUNDLED_SUFFIXES))
    }

    pub fn contains(&self, suffix: &str) -> bool {
        self.suffixes.contains(suffix)
    }

    pub fn len(&self) -> usize {
        self.suffixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.suffixes.is_empty()
    }

    /// Longest suffix (in labels) that matches the tail of `labels`. A match
    /// at 0 means the whole domain is itself a public suffix.
    fn longest_match(&self, labels: &[String]) -> Option<usize> {
        for start in 0..labels.len() {
            let candidate = labels[start..].join(".");
            if self.suffixes.contains(&candidate) {
                return Some(start);
            }
        }
        None
    }
}

/// A validated, lowercased domain name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DomainName {
    raw: String,
    labels: Vec<String>,
    registrable_part: String,
    public_suffix: String,
}

impl DomainName {
    /// Full lowercased domain string.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// All labels left of the public suffix, dot-joined.
    pub fn registrable_part(&self) -> &str {
        &self.registrable_part
    }

    pub fn public_suffix(&self) -> &str {
        &self.public_suffix
    }

    /// eTLD+1: the last label before the suffix plus the suffix. Two hosts
    /// belong to the same site when their registrable domains are equal.
    pub fn registrable_domain(&self) -> String {
        let left: Vec<&str> = self.registrable_part.split('.').collect();
        format!("{}.{}", left[left.len() - 1], self.public_suffix)
    }

    /// Registrable part with dots removed, hyphens retained: the string
    /// lexical features are computed over.
    pub fn lexical_string(&self) -> String {
        self.registrable_part.replace('.', "")
    }

    /// True when any label carries the punycode prefix.
    pub fn has_punycode_label(&self) -> bool {
        self.labels.iter().any(|l| l.starts_with("xn--"))
    }
}

fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && label.len() <= 63
        && !label.starts_with('-')
        && !label.ends_with('-')
        && label
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

/// Parses a raw domain string. Lowercases, strips one trailing dot, validates
/// every label as LDH, and locates the public suffix by longest match.
pub fn parse_domain_with(raw: &str, psl: &PublicSuffixList) -> Result<DomainName> {
    let trimmed = raw.trim().trim_end_matches('.').to_ascii_lowercase();
    if trimmed.is_empty() {
        return Err(Error::DomainParse {
            domain: raw.to_string(),
            reason: "empty after trimming".into(),
        });
    }
    if !trimmed.contains('.') {
        return Err(Error::DomainParse {
            domain: trimmed,
            reason: "expected at least one dot".into(),
        });
    }
    let labels: Vec<String> = trimmed.split('.').map(str::to_string).collect();
    for label in &labels {
        if !valid_label(label) {
            return Err(Error::DomainParse {
                domain: trimmed.clone(),
                reason: format!("invalid label {label:?}"),
            });
        }
    }
    let start = psl
        .longest_match(&labels)
        .ok_or_else(|| Error::DomainParse {
            domain: trimmed.clone(),
            reason: format!(
                "no public suffix in snapshot matches label {:?}",
                labels[labels.len() - 1]
            ),
        })?;
    if start == 0 {
        return Err(Error::DomainParse {
            domain: trimmed,
            reason: "domain is itself a public suffix; no registrable part".into(),
        });
    }
    Ok(DomainName {
        raw: trimmed,
        registrable_part: labels[..start].join("."),
        public_suffix: labels[start..].join("."),
        labels,
    })
}

/// [`parse_domain_with`] against the bundled snapshot.
pub fn parse_domain(raw: &str) -> Result<DomainName> {
    parse_domain_with(raw, PublicSuffixList::bundled())
}
