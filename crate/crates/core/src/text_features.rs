//! Lexicon-driven text modality features.
//!
//! Each term-driven component is `min(1, Σ weight · occurrences)` over the
//! consented text items. Sentiment is the polarity ratio
//! `(pos − neg) / max(1, pos + neg)` over matched occurrence counts.
//! Professional stability is structural: `0.25` per job entry plus a `0.25`
//! tenure bonus when some job entry started at least five years before the
//! most recent text item, capped at 1.

use std::collections::{BTreeMap, HashSet};

use chrono::Months;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{EvidenceRef, Modality};
use crate::profile::{Scope, SocialProfile, TextKind};
use crate::tokenize::{count_phrase, tokenize};

const DEFAULT_LEXICON: &str = include_str!("../assets/lexicon.toml");

/// Lexicon categories accepted in a lexicon file.
pub const LEXICON_CATEGORIES: [&str; 9] = [
    "education_signal",
    "community_charity",
    "riba_mentions",
    "gambling_mentions",
    "alcohol_mentions",
    "spending_conservatism",
    "gharar_terms",
    "positive",
    "negative",
];

/// Lexicon categories that accumulate directly into a vector component.
const ACCUMULATING: [&str; 6] = [
    "education_signal",
    "community_charity",
    "riba_mentions",
    "gambling_mentions",
    "alcohol_mentions",
    "spending_conservatism",
];

const JOB_ENTRY_STEP: f64 = 0.25;
const TENURE_BONUS: f64 = 0.25;
const TENURE_YEARS: u32 = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextFeatureError {
    #[error("lexicon category `{0}` is not part of the text feature schema")]
    UnknownLexiconCategory(String),
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconTerm {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub version: String,
    pub categories: BTreeMap<String, Vec<LexiconTerm>>,
}

impl Lexicon {
    pub fn from_toml(src: &str) -> Result<Self, TextFeatureError> {
        let lex: Lexicon =
            toml::from_str(src).map_err(|e| TextFeatureError::InvalidLexicon(e.to_string()))?;
        lex.validate()?;
        Ok(lex)
    }

    pub fn validate(&self) -> Result<(), TextFeatureError> {
        for (name, terms) in &self.categories {
            if !LEXICON_CATEGORIES.contains(&name.as_str()) {
                return Err(TextFeatureError::UnknownLexiconCategory(name.clone()));
            }
            let mut seen = HashSet::new();
            for t in terms {
                if tokenize(&t.term).is_empty() {
                    return Err(TextFeatureError::InvalidLexicon(format!(
                        "empty term in category `{name}`"
                    )));
                }
                if t.term != t.term.to_lowercase() {
                    return Err(TextFeatureError::InvalidLexicon(format!(
                        "term `{}` must be lowercase",
                        t.term
                    )));
                }
                if !t.weight.is_finite() || t.weight < 0.0 {
                    return Err(TextFeatureError::InvalidLexicon(format!(
                        "term `{}` has invalid weight {}",
                        t.term, t.weight
                    )));
                }
                if !seen.insert(t.term.as_str()) {
                    return Err(TextFeatureError::InvalidLexicon(format!(
                        "duplicate term `{}` in category `{name}`",
                        t.term
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn terms(&self, category: &str) -> &[LexiconTerm] {
        self.categories
            .get(category)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// The built-in lexicon shipped with the crate.
pub fn default_lexicon() -> Lexicon {
    Lexicon::from_toml(DEFAULT_LEXICON).expect("built-in lexicon is valid")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TextFeatureVector {
    pub professional_stability: f64,
    pub education_signal: f64,
    pub sentiment: f64,
    pub community_charity: f64,
    pub riba_mentions: f64,
    pub gambling_mentions: f64,
    pub alcohol_mentions: f64,
    pub spending_conservatism: f64,
}

impl TextFeatureVector {
    pub const DIM: usize = 8;
    pub const NAMES: [&'static str; 8] = [
        "professional_stability",
        "education_signal",
        "sentiment",
        "community_charity",
        "riba_mentions",
        "gambling_mentions",
        "alcohol_mentions",
        "spending_conservatism",
    ];

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.professional_stability,
            self.education_signal,
            self.sentiment,
            self.community_charity,
            self.riba_mentions,
            self.gambling_mentions,
            self.alcohol_mentions,
            self.spending_conservatism,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            professional_stability: a[0],
            education_signal: a[1],
            sentiment: a[2],
            community_charity: a[3],
            riba_mentions: a[4],
            gambling_mentions: a[5],
            alcohol_mentions: a[6],
            spending_conservatism: a[7],
        }
    }

    fn set(&mut self, name: &str, value: f64) {
        let idx = Self::NAMES
            .iter()
            .position(|n| *n == name)
            .expect("component name from schema");
        let mut a = self.to_array();
        a[idx] = value;
        *self = Self::from_array(a);
    }
}

/// Extracts the text modality vector and its supporting evidence.
pub fn extract_text_features(
    profile: &SocialProfile,
    lexicon: &Lexicon,
) -> Result<(TextFeatureVector, Vec<EvidenceRef>), TextFeatureError> {
    lexicon.validate()?;
    let mut vector = TextFeatureVector::default();
    let mut evidence = Vec::new();
    if !profile.consent.allows(Scope::Text) {
        return Ok((vector, evidence));
    }

    let tokenized: Vec<Vec<String>> = profile
        .text_items
        .iter()
        .map(|t| tokenize(&t.text))
        .collect();

    // Occurrence totals per (category, term index) keep the sums independent
    // of item order.
    let mut counts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (category, terms) in &lexicon.categories {
        let phrases: Vec<Vec<String>> = terms.iter().map(|t| tokenize(&t.term)).collect();
        let mut totals = vec![0usize; terms.len()];
        for (item, tokens) in profile.text_items.iter().zip(&tokenized) {
            for (i, phrase) in phrases.iter().enumerate() {
                let n = count_phrase(tokens, phrase);
                if n > 0 {
                    totals[i] += n;
                    evidence.push(EvidenceRef::new(
                        &item.item_id,
                        Modality::Text,
                        evidence_component(category),
                        &terms[i].term,
                    ));
                }
            }
        }
        counts.insert(category.as_str(), totals);
    }

    for category in ACCUMULATING {
        let Some(totals) = counts.get(category) else {
            continue;
        };
        let sum: f64 = lexicon
            .terms(category)
            .iter()
            .zip(totals)
            .map(|(t, &n)| t.weight * n as f64)
            .sum();
        vector.set(category, sum.min(1.0));
    }

    let total = |c: &str| counts.get(c).map_or(0, |v| v.iter().sum::<usize>());
    let (pos, neg) = (total("positive"), total("negative"));
    vector.sentiment = (pos as f64 - neg as f64) / ((pos + neg).max(1) as f64);

    let jobs: Vec<_> = profile
        .text_items
        .iter()
        .filter(|t| t.kind == TextKind::JobEntry)
        .collect();
    if !jobs.is_empty() {
        let latest = profile
            .text_items
            .iter()
            .map(|t| t.timestamp)
            .max()
            .expect("nonempty");
        let tenured = jobs.iter().find(|j| {
            j.timestamp
                .checked_add_months(Months::new(12 * TENURE_YEARS))
                .is_some_and(|end| end <= latest)
        });
        let bonus = if tenured.is_some() { TENURE_BONUS } else { 0.0 };
        vector.professional_stability = (JOB_ENTRY_STEP * jobs.len() as f64 + bonus).min(1.0);
        for j in &jobs {
            evidence.push(EvidenceRef::new(
                &j.item_id,
                Modality::Text,
                "professional_stability",
                "job_entry",
            ));
        }
        if let Some(j) = tenured {
            evidence.push(EvidenceRef::new(
                &j.item_id,
                Modality::Text,
                "professional_stability",
                format!("tenure_{TENURE_YEARS}y"),
            ));
        }
    }

    Ok((vector, evidence))
}

fn evidence_component(category: &str) -> &str {
    match category {
        "positive" | "negative" => "sentiment",
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{parse_profile, Source, TextItem};

    fn fixture(name: &str) -> SocialProfile {
        let src = match name {
            "a" => include_str!("../fixtures/user_a.json"),
            "b" => include_str!("../fixtures/user_b.json"),
            _ => include_str!("../fixtures/user_c.json"),
        };
        parse_profile(src.as_bytes()).unwrap()
    }

    fn with_text(texts: &[&str]) -> SocialProfile {
        let mut p = fixture("b");
        p.text_items = texts
            .iter()
            .enumerate()
            .map(|(i, t)| TextItem {
                item_id: format!("t{i}"),
                source: Source::Other,
                kind: TextKind::Post,
                text: t.to_string(),
                timestamp: "2024-01-01T00:00:00Z".parse().unwrap(),
            })
            .collect();
        p
    }

    #[test]
    fn default_lexicon_contents() {
        let lex = default_lexicon();
        let has = |c: &str, t: &str| lex.terms(c).iter().any(|x| x.term == t);
        assert!(has("riba_mentions", "interest"));
        assert!(has("riba_mentions", "loan"));
        assert!(has("gambling_mentions", "casino"));
        assert!(has("gambling_mentions", "bet"));
        assert!(!lex.terms("positive").is_empty());
        assert!(!lex.terms("negative").is_empty());
        assert_eq!(lex, default_lexicon());
    }

    #[test]
    fn engineer_bio_gives_stability() {
        let p = fixture("a");
        assert!(p.text_items[0]
            .text
            .contains("10 years at a top engineering firm"));
        let (v, ev) = extract_text_features(&p, &default_lexicon()).unwrap();
        assert!(v.professional_stability >= 0.5);
        assert_eq!(v.professional_stability, 0.75);
        assert_eq!(v.riba_mentions, 0.0);
        assert!(ev
            .iter()
            .any(|e| e.component == "professional_stability" && e.detail == "tenure_5y"));
    }

    #[test]
    fn empty_text_gives_zero_vector() {
        let p = with_text(&[]);
        let (v, ev) = extract_text_features(&p, &default_lexicon()).unwrap();
        assert_eq!(v, TextFeatureVector::default());
        assert!(ev.is_empty());
    }

    #[test]
    fn interest_post_flags_riba() {
        let p = with_text(&["making money from interest is easy"]);
        let (v, ev) = extract_text_features(&p, &default_lexicon()).unwrap();
        assert!(v.riba_mentions > 0.0);
        assert!(ev
            .iter()
            .any(|e| e.component == "riba_mentions" && e.detail == "interest" && e.item_id == "t0"));
    }

    #[test]
    fn accumulation_caps_at_one() {
        let p = with_text(&["casino casino casino", "bet bet roulette"]);
        let (v, _) = extract_text_features(&p, &default_lexicon()).unwrap();
        assert_eq!(v.gambling_mentions, 1.0);
    }

    #[test]
    fn phrases_match_contiguously() {
        let p = with_text(&["got a payday loan"]);
        let (v, ev) = extract_text_features(&p, &default_lexicon()).unwrap();
        // "payday loan" (0.5) plus the "loan" token (0.3)
        assert!((v.riba_mentions - 0.8).abs() < 1e-12);
        assert!(ev.iter().any(|e| e.detail == "payday loan"));
        let p = with_text(&["payday then a loan"]);
        let (v, _) = extract_text_features(&p, &default_lexicon()).unwrap();
        assert!((v.riba_mentions - 0.3).abs() < 1e-12);
    }

    #[test]
    fn sentiment_is_polarity_ratio() {
        let p = with_text(&["happy and grateful but stressed"]);
        let (v, _) = extract_text_features(&p, &default_lexicon()).unwrap();
        assert!((v.sentiment - 1.0 / 3.0).abs() < 1e-12);
        let p = with_text(&["terrible, sad"]);
        let (v, _) = extract_text_features(&p, &default_lexicon()).unwrap();
        assert_eq!(v.sentiment, -1.0);
    }

    #[test]
    fn consent_gate() {
        let mut p = fixture("a");
        p.consent.scopes.remove(&Scope::Text);
        let (v, ev) = extract_text_features(&p, &default_lexicon()).unwrap();
        assert_eq!(v, TextFeatureVector::default());
        assert!(ev.is_empty());
    }

    #[test]
    fn unknown_category_rejected() {
        let mut lex = default_lexicon();
        lex.categories.insert("vibes".into(), vec![]);
        assert_eq!(
            extract_text_features(&fixture("a"), &lex),
            Err(TextFeatureError::UnknownLexiconCategory("vibes".into()))
        );
        let src = "version = \"x\"\n[categories]\nvibes = [{ term = \"cool\", weight = 1.0 }]\n";
        assert!(matches!(
            Lexicon::from_toml(src),
            Err(TextFeatureError::UnknownLexiconCategory(_))
        ));
    }

    #[test]
    fn duplicate_terms_rejected() {
        let src = "version = \"x\"\n[categories]\nriba_mentions = [{ term = \"loan\", weight = 1.0 }, { term = \"loan\", weight = 0.5 }]\n";
        assert!(matches!(
            Lexicon::from_toml(src),
            Err(TextFeatureError::InvalidLexicon(_))
        ));
    }

    #[test]
    fn short_tenure_gets_no_bonus() {
        let mut p = fixture("a");
        for t in &mut p.text_items {
            t.timestamp = "2024-01-01T00:00:00Z".parse().unwrap();
        }
        let (v, _) = extract_text_features(&p, &default_lexicon()).unwrap();
        assert_eq!(v.professional_stability, 0.5);
    }
}
