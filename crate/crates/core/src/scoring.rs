//! Feature fusion and the linear credit score.
//!
//! `raw = w_T·v_text + w_I·v_image + w_G·v_graph − λ·F`, normalized with the
//! logistic function and mapped to a band. A failing compliance verdict caps
//! the band at `Low`; an alert caps it at `Moderate`.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compliance::{ComplianceStatus, ComplianceVerdict};
use crate::evidence::{EvidenceRef, Modality};
use crate::graph_features::GraphFeatureVector;
use crate::image_features::ImageFeatureVector;
use crate::text_features::TextFeatureVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid scoring model: {0}")]
    InvalidModel(String),
}

/// The three modality vectors plus the evidence collected while building them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBundle {
    pub text: TextFeatureVector,
    pub image: ImageFeatureVector,
    pub graph: GraphFeatureVector,
    pub evidence: Vec<EvidenceRef>,
}

impl FeatureBundle {
    pub fn zeros(graph_dim: usize) -> Self {
        Self {
            text: TextFeatureVector::default(),
            image: ImageFeatureVector::default(),
            graph: GraphFeatureVector::zeros(graph_dim),
            evidence: Vec::new(),
        }
    }

    /// Names of every fused component, in fusion order.
    pub fn component_names(&self) -> Vec<String> {
        TextFeatureVector::NAMES
            .iter()
            .chain(ImageFeatureVector::NAMES.iter())
            .map(|s| s.to_string())
            .chain(GraphFeatureVector::names(self.graph.ego_embedding.len()))
            .collect()
    }

    /// Value of a named scalar feature (text, image, or graph metric).
    pub fn feature(&self, name: &str) -> Option<f64> {
        scalar_features(self)
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v)
    }

    /// All named scalar features, excluding the graph embeddings.
    pub fn scalar_values(&self) -> BTreeMap<String, f64> {
        scalar_features(self)
            .into_iter()
            .map(|(n, v)| (n.to_string(), v))
            .collect()
    }

    pub fn evidence_for<'a>(
        &'a self,
        component: &'a str,
    ) -> impl Iterator<Item = &'a EvidenceRef> + 'a {
        self.evidence.iter().filter(move |e| e.component == component)
    }
}

fn scalar_features(b: &FeatureBundle) -> Vec<(&'static str, f64)> {
    let mut out: Vec<(&'static str, f64)> = TextFeatureVector::NAMES
        .iter()
        .copied()
        .zip(b.text.to_array())
        .collect();
    out.extend(ImageFeatureVector::NAMES.iter().copied().zip(b.image.to_array()));
    out.extend(GraphFeatureVector::METRIC_NAMES.iter().copied().zip([
        b.graph.degree_centrality,
        b.graph.clustering_coefficient,
        b.graph.verified_neighbor_fraction,
    ]));
    out
}

/// Names of the scalar features that rules and explanations may reference.
pub fn scalar_feature_names() -> Vec<&'static str> {
    TextFeatureVector::NAMES
        .iter()
        .chain(ImageFeatureVector::NAMES.iter())
        .chain(GraphFeatureVector::METRIC_NAMES.iter())
        .copied()
        .collect()
}

/// Modality a scalar feature belongs to.
pub fn feature_modality(name: &str) -> Option<Modality> {
    if TextFeatureVector::NAMES.contains(&name) {
        Some(Modality::Text)
    } else if ImageFeatureVector::NAMES.contains(&name) {
        Some(Modality::Image)
    } else if GraphFeatureVector::METRIC_NAMES.contains(&name) {
        Some(Modality::Graph)
    } else {
        None
    }
}

/// Concatenates text ‖ image ‖ graph.
pub fn fuse(
    text: &TextFeatureVector,
    image: &ImageFeatureVector,
    graph: &GraphFeatureVector,
) -> Result<Vec<f64>, ScoringError> {
    if graph.ego_embedding.len() != graph.neighbor_mean.len() {
        return Err(ScoringError::DimensionMismatch(format!(
            "ego embedding has {} components, neighbor mean {}",
            graph.ego_embedding.len(),
            graph.neighbor_mean.len()
        )));
    }
    let mut v = Vec::with_capacity(TextFeatureVector::DIM + ImageFeatureVector::DIM + graph.dim());
    v.extend(text.to_array());
    v.extend(image.to_array());
    v.extend(graph.to_vec());
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Low,
    Moderate,
    High,
}

impl Band {
    pub fn as_str(self) -> &'static str {
        match self {
            Band::Low => "low",
            Band::Moderate => "moderate",
            Band::High => "high",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Band::Low => "Low",
            Band::Moderate => "Moderate",
            Band::High => "High",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

impl std::str::FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(Band::High),
            "moderate" => Ok(Band::Moderate),
            "low" => Ok(Band::Low),
            other => Err(format!("unknown band `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringModel {
    pub w_t: Vec<f64>,
    pub w_i: Vec<f64>,
    pub w_g: Vec<f64>,
    pub lambda: f64,
    pub theta_high: f64,
    pub theta_low: f64,
    pub version: String,
}

impl ScoringModel {
    pub fn validate(&self, graph_dim: usize) -> Result<(), ScoringError> {
        let check = |name: &str, w: &[f64], n: usize| {
            if w.len() != n {
                return Err(ScoringError::DimensionMismatch(format!(
                    "{name} has {} weights, expected {n}",
                    w.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(ScoringError::InvalidModel(format!("{name} has non-finite weights")));
            }
            Ok(())
        };
        check("w_t", &self.w_t, TextFeatureVector::DIM)?;
        check("w_i", &self.w_i, ImageFeatureVector::DIM)?;
        check("w_g", &self.w_g, graph_dim)?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(ScoringError::InvalidModel(format!("lambda {} must be >= 0", self.lambda)));
        }
        if !(0.0 <= self.theta_low && self.theta_low < self.theta_high && self.theta_high <= 1.0) {
            return Err(ScoringError::InvalidModel(format!(
                "thresholds must satisfy 0 <= theta_low < theta_high <= 1 (got {} / {})",
                self.theta_low, self.theta_high
            )));
        }
        Ok(())
    }

    /// Weights in fusion order.
    pub fn fused_weights(&self) -> Vec<f64> {
        self.w_t
            .iter()
            .chain(&self.w_i)
            .chain(&self.w_g)
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents {
    pub text: f64,
    pub image: f64,
    pub graph: f64,
    pub penalty: f64,
}

impl ScoreComponents {
    /// Signed sum `text + image + graph − penalty`.
    pub fn raw(&self) -> f64 {
        self.text + self.image + self.graph - self.penalty
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreditDecision {
    pub decision_id: String,
    pub user_id: String,
    pub raw_score: f64,
    pub normalized_score: f64,
    pub band: Band,
    pub components: ScoreComponents,
    pub verdict: ComplianceVerdict,
    pub model_version: String,
    pub timestamp: DateTime<Utc>,
    /// Named scalar feature values the decision was computed from.
    pub feature_values: BTreeMap<String, f64>,
}

/// Identity fields stamped onto a decision by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMeta {
    pub decision_id: String,
    pub user_id: String,
    pub timestamp: DateTime<Utc>,
}

fn dot(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Logistic function clamped to the open unit interval.
pub fn logistic(x: f64) -> f64 {
    let n = 1.0 / (1.0 + (-x).exp());
    n.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Band from the normalized score alone. Lower bounds are closed.
pub fn banding(normalized: f64, model: &ScoringModel) -> Band {
    if normalized >= model.theta_high {
        Band::High
    } else if normalized < model.theta_low {
        Band::Low
    } else {
        Band::Moderate
    }
}

/// Applies the verdict caps to a score band.
pub fn capped_band(normalized: f64, model: &ScoringModel, status: ComplianceStatus) -> Band {
    let b = banding(normalized, model);
    match status {
        ComplianceStatus::Fail => Band::Low,
        ComplianceStatus::Alert => b.min(Band::Moderate),
        ComplianceStatus::Pass => b,
    }
}

pub fn score(
    model: &ScoringModel,
    bundle: &FeatureBundle,
    verdict: &ComplianceVerdict,
    meta: DecisionMeta,
) -> Result<CreditDecision, ScoringError> {
    model.validate(bundle.graph.dim())?;
    fuse(&bundle.text, &bundle.image, &bundle.graph)?;
    let components = ScoreComponents {
        text: dot(&model.w_t, &bundle.text.to_array()),
        image: dot(&model.w_i, &bundle.image.to_array()),
        graph: dot(&model.w_g, &bundle.graph.to_vec()),
        penalty: model.lambda * verdict.f_value,
    };
    let raw_score = components.raw();
    let normalized_score = logistic(raw_score);
    Ok(CreditDecision {
        decision_id: meta.decision_id,
        user_id: meta.user_id,
        raw_score,
        normalized_score,
        band: capped_band(normalized_score, model, verdict.status),
        components,
        verdict: verdict.clone(),
        model_version: model.version.clone(),
        timestamp: meta.timestamp,
        feature_values: bundle.scalar_values(),
    })
}
