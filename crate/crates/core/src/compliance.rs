//! Graded compliance verdicts from declarative rules.
//!
//! Every rule is evaluated; a triggered rule contributes one flag carrying the
//! evidence that satisfied its trigger. The verdict is `fail` when any flag is
//! fail-severity, `alert` when there are only alert flags, and `pass`
//! otherwise, with the penalty value `F` equal to 1.0, 0.5 and 0.0
//! respectively. Any flag puts the case into review.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{EvidenceRef, Modality};
use crate::image_features::ImageCategory;
use crate::profile::{Scope, Sector, SocialProfile};
use crate::scoring::{feature_modality, FeatureBundle};
use crate::text_features::LEXICON_CATEGORIES;

const DEFAULT_RULES: &str = include_str!("../assets/rules.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplianceError {
    #[error("invalid rule `{rule_id}`: {reason}")]
    InvalidRule { rule_id: String, reason: String },
    #[error("invalid ruleset: {0}")]
    InvalidRuleset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCategory {
    Riba,
    Gharar,
    Gambling,
    AlcoholDrugs,
    EthicalInvestment,
}

impl RuleCategory {
    pub const ALL: [RuleCategory; 5] = [
        RuleCategory::Riba,
        RuleCategory::Gharar,
        RuleCategory::Gambling,
        RuleCategory::AlcoholDrugs,
        RuleCategory::EthicalInvestment,
    ];

    /// Tag used for this category in the policy corpus.
    pub fn as_str(self) -> &'static str {
        match self {
            RuleCategory::Riba => "riba",
            RuleCategory::Gharar => "gharar",
            RuleCategory::Gambling => "gambling",
            RuleCategory::AlcoholDrugs => "alcohol_drugs",
            RuleCategory::EthicalInvestment => "ethical_investment",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Alert,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trigger {
    /// All given bounds must hold for the named scalar feature.
    FeatureThreshold {
        feature: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ge: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        le: Option<f64>,
    },
    LabelPresence {
        category: ImageCategory,
    },
    NeighborSector {
        sectors: Vec<Sector>,
    },
    TextPhrase {
        category: String,
    },
    AnyOf {
        triggers: Vec<Trigger>,
    },
}

impl Trigger {
    fn validate(&self) -> Result<(), String> {
        match self {
            Trigger::FeatureThreshold {
                feature,
                gt,
                ge,
                lt,
                le,
            } => {
                if feature_modality(feature).is_none() {
                    return Err(format!("unknown feature `{feature}`"));
                }
                let bounds = [gt, ge, lt, le];
                if bounds.iter().all(|b| b.is_none()) {
                    return Err(format!("threshold on `{feature}` has no bounds"));
                }
                if bounds.iter().flat_map(|b| b.iter()).any(|x| !x.is_finite()) {
                    return Err(format!("threshold on `{feature}` has a non-finite bound"));
                }
                Ok(())
            }
            Trigger::LabelPresence { category } => {
                if *category == ImageCategory::Neutral {
                    Err("label_presence cannot target the neutral category".into())
                } else {
                    Ok(())
                }
            }
            Trigger::NeighborSector { sectors } => {
                if sectors.is_empty() {
                    Err("neighbor_sector needs at least one sector".into())
                } else {
                    Ok(())
                }
            }
            Trigger::TextPhrase { category } => {
                if LEXICON_CATEGORIES.contains(&category.as_str())
                    && !matches!(category.as_str(), "positive" | "negative")
                {
                    Ok(())
                } else {
                    Err(format!("unknown lexicon category `{category}`"))
                }
            }
            Trigger::AnyOf { triggers } => {
                if triggers.is_empty() {
                    return Err("any_of needs at least one trigger".into());
                }
                triggers.iter().try_for_each(Trigger::validate)
            }
        }
    }

    /// Evidence satisfying the trigger, or `None` when it does not fire.
    fn fire(&self, profile: &SocialProfile, bundle: &FeatureBundle) -> Option<Vec<EvidenceRef>> {
        match self {
            Trigger::FeatureThreshold {
                feature,
                gt,
                ge,
                lt,
                le,
            } => {
                let x = bundle.feature(feature)?;
                let holds = gt.is_none_or(|b| x > b)
                    && ge.is_none_or(|b| x >= b)
                    && lt.is_none_or(|b| x < b)
                    && le.is_none_or(|b| x <= b);
                if !holds {
                    return None;
                }
                let ev: Vec<EvidenceRef> = bundle.evidence_for(feature).cloned().collect();
                if ev.is_empty() {
                    // value-only trigger (e.g. an upper bound met by zero)
                    let modality = feature_modality(feature).expect("validated");
                    Some(vec![EvidenceRef::new(
                        &profile.user_id,
                        modality,
                        feature.as_str(),
                        format!("{feature}={x}"),
                    )])
                } else {
                    Some(ev)
                }
            }
            Trigger::LabelPresence { category } => {
                let ev: Vec<EvidenceRef> = bundle
                    .evidence_for(category.component_name())
                    .filter(|e| e.modality == Modality::Image)
                    .cloned()
                    .collect();
                (!ev.is_empty()).then_some(ev)
            }
            Trigger::NeighborSector { sectors } => {
                if !profile.consent.allows(Scope::Graph) {
                    return None;
                }
                let g = &profile.graph;
                let mut seen = HashSet::new();
                let ev: Vec<EvidenceRef> = g
                    .neighbors(&profile.user_id)
                    .filter(|(n, _)| seen.insert(*n))
                    .filter_map(|(n, _)| {
                        let sector = g.nodes[n].sector;
                        sectors.contains(&sector).then(|| {
                            EvidenceRef::new(
                                &profile.user_id,
                                Modality::Graph,
                                "neighbor_sector",
                                format!("{n}:{}", sector.as_str()),
                            )
                        })
                    })
                    .collect();
                (!ev.is_empty()).then_some(ev)
            }
            Trigger::TextPhrase { category } => {
                let ev: Vec<EvidenceRef> = bundle
                    .evidence_for(category)
                    .filter(|e| e.modality == Modality::Text)
                    .cloned()
                    .collect();
                (!ev.is_empty()).then_some(ev)
            }
            Trigger::AnyOf { triggers } => {
                let mut out: Vec<EvidenceRef> = Vec::new();
                for t in triggers {
                    for e in t.fire(profile, bundle).into_iter().flatten() {
                        if !out.contains(&e) {
                            out.push(e);
                        }
                    }
                }
                (!out.is_empty()).then_some(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplianceRule {
    pub rule_id: String,
    pub category: RuleCategory,
    pub severity: Severity,
    pub policy_tag: String,
    pub trigger: Trigger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    rules: Vec<ComplianceRule>,
}

/// Checks rule ids are unique and every trigger references defined schema
/// elements.
pub fn validate_rules(rules: &[ComplianceRule]) -> Result<(), ComplianceError> {
    let mut ids = HashSet::new();
    for r in rules {
        let invalid = |reason: String| ComplianceError::InvalidRule {
            rule_id: r.rule_id.clone(),
            reason,
        };
        if r.rule_id.is_empty() {
            return Err(invalid("empty rule_id".into()));
        }
        if !ids.insert(r.rule_id.as_str()) {
            return Err(invalid("duplicate rule_id".into()));
        }
        r.trigger.validate().map_err(invalid)?;
    }
    Ok(())
}

pub fn parse_rules(src: &str) -> Result<Vec<ComplianceRule>, ComplianceError> {
    let file: RuleFile =
        toml::from_str(src).map_err(|e| ComplianceError::InvalidRuleset(e.to_string()))?;
    validate_rules(&file.rules)?;
    Ok(file.rules)
}

/// The built-in ruleset.
pub fn default_ruleset() -> Vec<ComplianceRule> {
    parse_rules(DEFAULT_RULES).expect("built-in ruleset is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceFlag {
    pub rule_id: String,
    pub category: RuleCategory,
    pub severity: Severity,
    pub policy_tag: String,
    pub evidence: Vec<EvidenceRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplianceStatus {
    Pass,
    Alert,
    Fail,
}

impl ComplianceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ComplianceStatus::Pass => "pass",
            ComplianceStatus::Alert => "alert",
            ComplianceStatus::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceVerdict {
    pub status: ComplianceStatus,
    pub f_value: f64,
    pub flags: Vec<ComplianceFlag>,
    pub review_required: bool,
}

impl ComplianceVerdict {
    pub fn pass() -> Self {
        Self::from_flags(Vec::new())
    }

    /// Derives status, penalty value and review requirement from the flags.
    pub fn from_flags(flags: Vec<ComplianceFlag>) -> Self {
        let status = if flags.iter().any(|f| f.severity == Severity::Fail) {
            ComplianceStatus::Fail
        } else if flags.is_empty() {
            ComplianceStatus::Pass
        } else {
            ComplianceStatus::Alert
        };
        let f_value = match status {
            ComplianceStatus::Pass => 0.0,
            ComplianceStatus::Alert => 0.5,
            ComplianceStatus::Fail => 1.0,
        };
        Self {
            status,
            f_value,
            review_required: !flags.is_empty(),
            flags,
        }
    }

    /// True when status, penalty value, flags and review requirement agree.
    pub fn is_consistent(&self) -> bool {
        let any_fail = self.flags.iter().any(|f| f.severity == Severity::Fail);
        let expected = match (self.flags.is_empty(), any_fail) {
            (true, _) => (ComplianceStatus::Pass, 0.0),
            (false, true) => (ComplianceStatus::Fail, 1.0),
            (false, false) => (ComplianceStatus::Alert, 0.5),
        };
        (self.status, self.f_value) == expected
            && self.review_required == !self.flags.is_empty()
            && self.flags.iter().all(|f| !f.evidence.is_empty())
    }

    pub fn categories(&self) -> Vec<RuleCategory> {
        let mut out: Vec<RuleCategory> = self.flags.iter().map(|f| f.category).collect();
        out.sort();
        out.dedup();
        out
    }
}

pub fn evaluate_compliance(
    profile: &SocialProfile,
    bundle: &FeatureBundle,
    rules: &[ComplianceRule],
) -> Result<ComplianceVerdict, ComplianceError> {
    validate_rules(rules)?;
    let mut ordered: Vec<&ComplianceRule> = rules.iter().collect();
    ordered.sort_by(|a, b| a.rule_id.cmp(&b.rule_id));
    let flags = ordered
        .into_iter()
        .filter_map(|r| {
            r.trigger.fire(profile, bundle).map(|evidence| ComplianceFlag {
                rule_id: r.rule_id.clone(),
                category: r.category,
                severity: r.severity,
                policy_tag: r.policy_tag.clone(),
                evidence,
            })
        })
        .collect();
    Ok(ComplianceVerdict::from_flags(flags))
}
