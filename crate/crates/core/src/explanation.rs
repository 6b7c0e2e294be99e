//! Retrieval-grounded decision explanations.
//!
//! The query is built from the decision's flags, its largest weighted feature
//! contributions and its band. The report is rendered from a fixed template
//! using only values carried by the decision, and every compliance flag is
//! backed by a citation to a policy document tagged with the flag's category.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compliance::{ComplianceStatus, RuleCategory};
use crate::knowledge_base::{Hit, KnowledgeBase};
use crate::scoring::{fuse, CreditDecision, FeatureBundle, ScoringModel};

pub const RECOMMENDATION: &str = "remove such content or clarify context before reassessment";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplanationError {
    #[error("no policy document is tagged `{}` to support flag `{rule_id}`", .category.as_str())]
    MissingPolicyCoverage {
        rule_id: String,
        category: RuleCategory,
    },
    #[error("retrieval hit `{0}` is not in the corpus")]
    UnknownDocument(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    /// Flag rule id, or `score:<band>` for the general context citation.
    pub subject: String,
    pub doc_id: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub decision_id: String,
    pub narrative: String,
    pub factor_lines: Vec<String>,
    pub citations: Vec<Citation>,
    pub recommendation: Option<String>,
}

impl ExplanationReport {
    /// Plain-text rendering for terminals.
    pub fn render_text(&self) -> String {
        let mut out = format!("Decision {}\n\n{}\n\nFactors:\n", self.decision_id, self.narrative);
        for l in &self.factor_lines {
            out.push_str(&format!("  {l}\n"));
        }
        if !self.citations.is_empty() {
            out.push_str("\nCitations:\n");
            for c in &self.citations {
                out.push_str(&format!("  [{}] {} ({})\n", c.doc_id, c.title, c.subject));
            }
        }
        if let Some(r) = &self.recommendation {
            out.push_str(&format!("\nRecommendation: {r}\n"));
        }
        out
    }
}

/// Qualitative level of a component value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    None,
    Low,
    Medium,
    High,
}

impl Level {
    pub fn of(value: f64) -> Self {
        if value >= 0.6 {
            Level::High
        } else if value >= 0.3 {
            Level::Medium
        } else if value > 0.0 {
            Level::Low
        } else {
            Level::None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::None => "None",
            Level::Low => "Low",
            Level::Medium => "Medium",
            Level::High => "High",
        }
    }
}

/// Builds the retrieval query for a decision.
pub fn build_query(decision: &CreditDecision, bundle: &FeatureBundle, model: &ScoringModel) -> String {
    let mut parts: Vec<String> = Vec::new();
    for f in &decision.verdict.flags {
        parts.push(f.category.as_str().to_string());
        parts.push(f.policy_tag.clone());
    }
    if let Ok(fused) = fuse(&bundle.text, &bundle.image, &bundle.graph) {
        let names = bundle.component_names();
        let mut contrib: Vec<(usize, f64)> = model
            .fused_weights()
            .iter()
            .zip(&fused)
            .map(|(w, x)| (w * x).abs())
            .enumerate()
            .filter(|(_, c)| *c > 0.0)
            .collect();
        contrib.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        parts.extend(contrib.iter().take(3).map(|(i, _)| names[*i].clone()));
    }
    parts.push(decision.band.as_str().to_string());
    parts.join(" ").to_lowercase()
}

/// Renders an explanation from a decision and retrieval hits.
pub trait ExplanationGenerator {
    fn generate(
        &self,
        decision: &CreditDecision,
        hits: &[Hit],
        kb: &KnowledgeBase,
    ) -> Result<ExplanationReport, ExplanationError>;
}

/// Deterministic template generator.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateGenerator;

fn value(d: &CreditDecision, name: &str) -> f64 {
    d.feature_values.get(name).copied().unwrap_or(0.0)
}

struct Factor {
    label: &'static str,
    level: Level,
    reason: String,
}

fn factors(d: &CreditDecision) -> Vec<Factor> {
    let stability = Level::of(value(d, "professional_stability"));
    let stability_reason = match stability {
        Level::High => "verified career history",
        Level::Medium => "partial career history",
        Level::Low => "limited career history",
        Level::None => "no career history",
    };

    let risks = ["alcohol_risk", "gambling_risk", "drugs_risk", "party_risk"];
    let (top_risk, risk) = risks
        .iter()
        .map(|r| (*r, value(d, r)))
        .fold(("", 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let lifestyle_reason = if risk > 0.0 {
        format!("{} {risk:.2}", top_risk.replace('_', " "))
    } else {
        "no risk indicators".to_string()
    };

    let verified = value(d, "verified_neighbor_fraction");
    let network_reason = if verified > 0.0 {
        format!("verified neighbor fraction {verified:.2}")
    } else {
        "no verified connections".to_string()
    };

    let spending = 1.0 - (value(d, "party_risk") + value(d, "alcohol_risk")) / 2.0;

    let compliance_reason = if d.verdict.flags.is_empty() {
        "no flags".to_string()
    } else {
        d.verdict
            .flags
            .iter()
            .map(|f| format!("{} {}", f.rule_id, f.category.as_str()))
            .collect::<Vec<_>>()
            .join(", ")
    };

    vec![
        Factor {
            label: "Job Stability",
            level: stability,
            reason: stability_reason.to_string(),
        },
        Factor {
            label: "Lifestyle Risk",
            level: Level::of(risk),
            reason: lifestyle_reason,
        },
        Factor {
            label: "Network",
            level: Level::of(verified),
            reason: network_reason,
        },
        Factor {
            label: "Spending Patterns",
            level: Level::of(spending),
            reason: "heuristic: inverse of party and alcohol risk".to_string(),
        },
        Factor {
            label: "Compliance Flag",
            level: Level::of(d.verdict.f_value),
            reason: compliance_reason,
        },
    ]
}

fn reasoning(d: &CreditDecision, factors: &[Factor]) -> String {
    let mut parts: Vec<String> = d
        .verdict
        .flags
        .iter()
        .map(|f| format!("non-halal flag {} ({})", f.rule_id, f.category.as_str()))
        .collect();
    let positive = [0usize, 2];
    for i in positive {
        if factors[i].level >= Level::Medium {
            parts.push(format!(
                "{} {}",
                factors[i].label.to_lowercase(),
                factors[i].level.as_str().to_lowercase()
            ));
        }
    }
    if factors[1].level >= Level::Medium {
        parts.push(format!(
            "lifestyle risk {}",
            factors[1].level.as_str().to_lowercase()
        ));
    }
    if d.verdict.flags.is_empty() {
        parts.push("clean compliance record".to_string());
    }
    parts.join(", ")
}

impl ExplanationGenerator for TemplateGenerator {
    fn generate(
        &self,
        d: &CreditDecision,
        hits: &[Hit],
        kb: &KnowledgeBase,
    ) -> Result<ExplanationReport, ExplanationError> {
        for h in hits {
            if kb.document(&h.doc_id).is_none() {
                return Err(ExplanationError::UnknownDocument(h.doc_id.clone()));
            }
        }

        let mut citations = Vec::new();
        for flag in &d.verdict.flags {
            let tag = flag.category.as_str();
            let doc = hits
                .iter()
                .filter_map(|h| kb.document(&h.doc_id))
                .find(|doc| doc.has_tag(tag))
                .or_else(|| kb.documents().find(|doc| doc.has_tag(tag)))
                .ok_or_else(|| ExplanationError::MissingPolicyCoverage {
                    rule_id: flag.rule_id.clone(),
                    category: flag.category,
                })?;
            citations.push(Citation {
                subject: flag.rule_id.clone(),
                doc_id: doc.doc_id.clone(),
                title: doc.title.clone(),
            });
        }
        if let Some(top) = hits.first() {
            if !citations.iter().any(|c| c.doc_id == top.doc_id) {
                let doc = kb.document(&top.doc_id).expect("checked above");
                citations.push(Citation {
                    subject: format!("score:{}", d.band.as_str()),
                    doc_id: doc.doc_id.clone(),
                    title: doc.title.clone(),
                });
            }
        }

        let factors = factors(d);
        let factor_lines: Vec<String> = factors
            .iter()
            .map(|f| format!("{}: {} {{{}}}", f.label, f.level.as_str(), f.reason))
            .collect();

        let mut sentences = vec![match d.verdict.status {
            ComplianceStatus::Pass => format!(
                "Profile {} shows no compliance concerns across text, image and network signals.",
                d.user_id
            ),
            ComplianceStatus::Alert => format!(
                "Profile {} raised a compliance alert and is held for officer review.",
                d.user_id
            ),
            ComplianceStatus::Fail => format!(
                "Profile {} failed the compliance check and is held for officer review.",
                d.user_id
            ),
        }];
        for flag in &d.verdict.flags {
            let mut items: Vec<&str> = flag.evidence.iter().map(|e| e.item_id.as_str()).collect();
            items.dedup();
            sentences.push(format!(
                "Non-halal flag {} ({}, {}) raised by {}.",
                flag.rule_id,
                flag.category.as_str(),
                match flag.severity {
                    crate::compliance::Severity::Alert => "alert",
                    crate::compliance::Severity::Fail => "fail",
                },
                items.join(", ")
            ));
        }
        for c in &citations {
            sentences.push(format!("Policy {} ({}) applies to {}.", c.doc_id, c.title, c.subject));
        }
        sentences.push(format!(
            "Score: {}, reasoning: {}.",
            d.band.title(),
            reasoning(d, &factors)
        ));
        let recommendation =
            (d.verdict.status == ComplianceStatus::Alert).then(|| RECOMMENDATION.to_string());
        if let Some(r) = &recommendation {
            sentences.push(format!("Recommendation: {r}."));
        }

        Ok(ExplanationReport {
            decision_id: d.decision_id.clone(),
            narrative: sentences.join(" "),
            factor_lines,
            citations,
            recommendation,
        })
    }
}

/// Renders the report with the template generator.
pub fn generate_explanation(
    decision: &CreditDecision,
    hits: &[Hit],
    kb: &KnowledgeBase,
) -> Result<ExplanationReport, ExplanationError> {
    TemplateGenerator.generate(decision, hits, kb)
}
