//! The fixed 34-feature catalog. Column order everywhere downstream follows
//! catalog order, so the catalog is the single source of truth for feature
//! ids, kinds and categories.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(pub u8);

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

impl FeatureId {
    pub fn parse(s: &str) -> Option<FeatureId> {
        let n: u8 = s.strip_prefix('f')?.parse().ok()?;
        (1..=34).contains(&n).then_some(FeatureId(n))
    }

    /// Zero-based catalog column index.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureCategory {
    Lexical,
    Tld,
    Content,
    Whois,
}

impl fmt::Display for FeatureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeatureCategory::Lexical => "lexical",
            FeatureCategory::Tld => "tld",
            FeatureCategory::Content => "content",
            FeatureCategory::Whois => "whois",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Binary,
    Count,
    Ratio,
    Score,
}

impl FeatureKind {
    /// Binary features are left untouched by scaling and contribute 0/1
    /// mismatches to Gower distance; everything else is continuous.
    pub fn is_binary(self) -> bool {
        matches!(self, FeatureKind::Binary)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeatureKind::Binary => "binary",
            FeatureKind::Count => "count",
            FeatureKind::Ratio => "ratio",
            FeatureKind::Score => "score",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureEntry {
    pub id: FeatureId,
    pub name: &'static str,
    pub category: FeatureCategory,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureCatalog {
    entries: Vec<FeatureEntry>,
}

impl FeatureCatalog {
    pub fn entries(&self) -> &[FeatureEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: FeatureId) -> &FeatureEntry {
        &self.entries[id.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.entries.iter().map(|e| e.id)
    }
}

use FeatureCategory::{Content, Lexical, Tld, Whois};
use FeatureKind::{Binary, Count, Ratio, Score};

const ENTRIES: [(&str, FeatureCategory, FeatureKind); 34] = [
    ("vowel_count", Lexical, Count),
    ("dictionary_word_count", Lexical, Count),
    ("unique_char_count", Lexical, Count),
    ("letter_count", Lexical, Count),
    ("digit_ratio", Lexical, Ratio),
    ("hyphen_count", Lexical, Count),
    ("punycode_prefix", Lexical, Binary),
    ("fundraising_keywords", Lexical, Binary),
    ("help_keywords", Lexical, Binary),
    ("cause_keywords", Lexical, Binary),
    ("war_keywords", Lexical, Binary),
    ("for_to_keywords", Lexical, Binary),
    ("digit_4_2", Lexical, Binary),
    ("cheap_tld", Tld, Binary),
    ("multi_label_tld", Tld, Binary),
    ("tld_badness_score", Tld, Score),
    ("ssl_retrievable", Content, Binary),
    ("landing_page_size_kb", Content, Score),
    ("same_landing_domain", Content, Binary),
    ("internal_link_count", Content, Count),
    ("external_link_count", Content, Count),
    ("external_link_len_mean", Content, Score),
    ("external_link_len_std", Content, Score),
    ("shortener_link_ratio", Content, Ratio),
    ("social_link_ratio", Content, Ratio),
    ("external_form_link", Content, Binary),
    ("paypal_link", Content, Binary),
    ("crypto_tokens", Content, Binary),
    ("bank_tokens", Content, Binary),
    ("card_tokens", Content, Binary),
    ("whois_registrar", Whois, Binary),
    ("whois_name_server", Whois, Binary),
    ("self_resolving_ns", Whois, Binary),
    ("name_server_count", Whois, Count),
];

/// The 34-feature catalog in canonical order: f1-f13 lexical, f14-f16 TLD,
/// f17-f30 content, f31-f34 WHOIS.
pub fn catalog_default() -> FeatureCatalog {
    let entries = ENTRIES
        .iter()
        .enumerate()
        .map(|(i, &(name, category, kind))| FeatureEntry {
            id: FeatureId(i as u8 + 1),
            name,
            category,
            kind,
        })
        .collect();
    FeatureCatalog { entries }
}
