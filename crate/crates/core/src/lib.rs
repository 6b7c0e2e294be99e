//! Alternative-data credit decisioning.
//!
//! A [`SocialProfile`] is turned into text, image and graph feature vectors,
//! graded against Islamic-finance compliance rules, scored by a linear fusion
//! model and explained with citations retrieved from a policy corpus. The
//! [`service`] module wraps the pipeline in an audited application workflow.

pub mod compliance;
pub mod config;
pub mod evidence;
pub mod explanation;
pub mod graph_features;
pub mod image_features;
pub mod knowledge_base;
pub mod pipeline;
pub mod profile;
pub mod scoring;
pub mod service;
pub mod synth;
pub mod text_features;
pub mod tokenize;

pub use compliance::{
    default_ruleset, evaluate_compliance, ComplianceFlag, ComplianceRule, ComplianceStatus,
    ComplianceVerdict, RuleCategory, Severity,
};
pub use config::Config;
pub use evidence::{EvidenceRef, Modality};
pub use explanation::{build_query, generate_explanation, Citation, ExplanationReport};
pub use graph_features::{Activation, GnnParams, GraphFeatureVector};
pub use image_features::ImageFeatureVector;
pub use knowledge_base::{Hit, KnowledgeBase, PolicyDocument};
pub use pipeline::{Evaluation, Pipeline, PipelineError};
pub use profile::{emit_profile, parse_profile, SocialProfile};
pub use scoring::{Band, CreditDecision, DecisionMeta, FeatureBundle, ScoringModel};
pub use service::{Application, ApplicationStatus, ReviewAction, ReviewKind, Service, ServiceError};
pub use synth::{random_profile, synthesize_profile, Archetype};
pub use text_features::TextFeatureVector;
