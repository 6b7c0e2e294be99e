//! Application lifecycle: submission, explanation, officer review and what-if
//! reassessment over a [`Store`], with every state change written to the
//! audit log.
//!
//! State-changing operations hold a single writer lock, so id assignment,
//! persistence and audit appends never interleave. Reads go straight to the
//! store.

pub mod audit;
pub mod store;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub use audit::{AuditEvent, AuditKind, NewAuditEvent};
pub use store::{FileStore, MemoryStore, Store, StoreError};

use crate::compliance::{ComplianceStatus, RuleCategory};
use crate::explanation::{ExplanationError, ExplanationReport};
use crate::image_features::ImageFeatureError;
use crate::pipeline::{Pipeline, PipelineError};
use crate::profile::{emit_profile, parse_profile, ProfileError, SocialProfile};
use crate::scoring::{Band, CreditDecision, DecisionMeta};
use crate::text_features::TextFeatureError;
use audit::sha256_hex;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("consent not granted; the profile was not scored")]
    ConsentDenied,
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("unknown application `{0}`")]
    UnknownApplication(String),
    #[error("application `{0}` has no decision yet")]
    NotYetDecided(String),
    #[error("application `{0}` is not in review")]
    NotInReview(String),
    #[error("invalid review action: {0}")]
    InvalidReview(String),
    #[error("item `{0}` is not a text or image item of the stored profile")]
    UnknownItemId(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl ServiceError {
    /// HTTP status for this error.
    pub fn status_code(&self) -> u16 {
        match self {
            ServiceError::ConsentDenied
            | ServiceError::Profile(_)
            | ServiceError::InvalidReview(_)
            | ServiceError::UnknownItemId(_) => 400,
            ServiceError::Pipeline(
                PipelineError::Text(TextFeatureError::UnknownLexiconCategory(_))
                | PipelineError::Image(ImageFeatureError::UnknownLabel { .. }),
            ) => 400,
            ServiceError::UnknownApplication(_) => 404,
            ServiceError::NotYetDecided(_) | ServiceError::NotInReview(_) => 409,
            ServiceError::Pipeline(PipelineError::Explanation(ExplanationError::MissingPolicyCoverage {
                ..
            })) => 500,
            ServiceError::Pipeline(_) | ServiceError::Store(_) => 500,
        }
    }

    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::ConsentDenied => "consent_denied",
            ServiceError::Profile(ProfileError::MalformedDocument(_)) => "malformed_document",
            ServiceError::Profile(ProfileError::SchemaViolation(_)) => "schema_violation",
            ServiceError::Profile(ProfileError::MissingEgoNode(_)) => "missing_ego_node",
            ServiceError::UnknownApplication(_) => "unknown_application",
            ServiceError::NotYetDecided(_) => "not_yet_decided",
            ServiceError::NotInReview(_) => "not_in_review",
            ServiceError::InvalidReview(_) => "invalid_review",
            ServiceError::UnknownItemId(_) => "unknown_item_id",
            ServiceError::Pipeline(PipelineError::Explanation(
                ExplanationError::MissingPolicyCoverage { .. },
            )) => "missing_policy_coverage",
            ServiceError::Pipeline(PipelineError::Image(ImageFeatureError::UnknownLabel { .. })) => {
                "unknown_label"
            }
            ServiceError::Pipeline(_) => "pipeline_error",
            ServiceError::Store(_) => "store_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplicationStatus {
    Pending,
    Decided,
    InReview,
    Resolved,
}

impl ApplicationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ApplicationStatus::Pending => "pending",
            ApplicationStatus::Decided => "decided",
            ApplicationStatus::InReview => "in_review",
            ApplicationStatus::Resolved => "resolved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewKind {
    Approve,
    OverrideBand,
    RequestInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewAction {
    pub reviewer: String,
    pub action: ReviewKind,
    #[serde(default)]
    pub new_band: Option<Band>,
    #[serde(default)]
    pub note: String,
    /// Filled in by the service when absent.
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

impl ReviewAction {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.reviewer.trim().is_empty() {
            return Err(ServiceError::InvalidReview("reviewer must be nonempty".into()));
        }
        match (self.action, self.new_band) {
            (ReviewKind::OverrideBand, None) => Err(ServiceError::InvalidReview(
                "override_band requires new_band".into(),
            )),
            (ReviewKind::OverrideBand, Some(_)) if self.note.trim().is_empty() => Err(
                ServiceError::InvalidReview("override_band requires a justification note".into()),
            ),
            (ReviewKind::Approve | ReviewKind::RequestInfo, Some(_)) => Err(
                ServiceError::InvalidReview("new_band is only allowed with override_band".into()),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Application {
    pub application_id: String,
    pub profile: SocialProfile,
    pub status: ApplicationStatus,
    pub decision: Option<CreditDecision>,
    pub created: DateTime<Utc>,
    pub updated: DateTime<Utc>,
    #[serde(default)]
    pub reviews: Vec<ReviewAction>,
}

impl Application {
    /// Status and decision consistency.
    pub fn is_consistent(&self) -> bool {
        match self.status {
            ApplicationStatus::Pending => self.decision.is_none(),
            ApplicationStatus::Decided | ApplicationStatus::Resolved => self.decision.is_some(),
            ApplicationStatus::InReview => self
                .decision
                .as_ref()
                .is_some_and(|d| d.verdict.review_required),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub application_id: String,
    pub decision: CreditDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub application_id: String,
    pub user_id: String,
    pub band: Band,
    pub verdict: ComplianceStatus,
    pub flags: Vec<String>,
    pub categories: Vec<RuleCategory>,
    pub status: ApplicationStatus,
    pub created: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    #[serde(default)]
    pub application_id: Option<String>,
    pub exclude_item_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfDelta {
    pub band_changed: bool,
    pub original_band: Band,
    pub hypothetical_band: Band,
    pub normalized_score_change: f64,
    pub original_verdict: ComplianceStatus,
    pub hypothetical_verdict: ComplianceStatus,
    pub flags_removed: Vec<String>,
    pub flags_added: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub application_id: String,
    pub excluded: BTreeSet<String>,
    pub original: CreditDecision,
    pub hypothetical: CreditDecision,
    pub delta: WhatIfDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub application_id: String,
    /// The decision as first scored, from the audit log.
    pub scored: CreditDecision,
    pub recomputed: CreditDecision,
    pub identical: bool,
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Deterministic clock advancing by a fixed step on every reading.
#[derive(Debug)]
pub struct StepClock {
    start: DateTime<Utc>,
    step_ms: i64,
    ticks: AtomicI64,
}

impl StepClock {
    pub fn new(start: DateTime<Utc>, step: Duration) -> Self {
        Self {
            start,
            step_ms: step.num_milliseconds(),
            ticks: AtomicI64::new(0),
        }
    }
}

impl Clock for StepClock {
    fn now(&self) -> DateTime<Utc> {
        let n = self.ticks.fetch_add(1, Ordering::SeqCst);
        self.start + Duration::milliseconds(n * self.step_ms)
    }
}

pub struct Service {
    pipeline: Pipeline,
    store: Box<dyn Store>,
    clock: Box<dyn Clock>,
    writer: Mutex<()>,
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("record serializes")
}

impl Service {
    pub fn new(pipeline: Pipeline, store: Box<dyn Store>, clock: Box<dyn Clock>) -> Self {
        Self {
            pipeline,
            store,
            clock,
            writer: Mutex::new(()),
        }
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    fn audit(
        &self,
        kind: AuditKind,
        application_id: Option<&str>,
        payload: serde_json::Value,
        timestamp: DateTime<Utc>,
    ) -> Result<AuditEvent, ServiceError> {
        Ok(self.store.append_audit(NewAuditEvent {
            timestamp,
            kind,
            application_id: application_id.map(str::to_string),
            payload,
        })?)
    }

    fn load(&self, id: &str) -> Result<Application, ServiceError> {
        self.store
            .get_application(id)?
            .ok_or_else(|| ServiceError::UnknownApplication(id.to_string()))
    }

    /// Parses, scores and stores a profile document.
    pub fn submit_application(&self, document: &[u8]) -> Result<SubmitResponse, ServiceError> {
        let profile = parse_profile(document)?;
        self.submit_profile(profile)
    }

    pub fn submit_profile(&self, profile: SocialProfile) -> Result<SubmitResponse, ServiceError> {
        profile.validate()?;
        let _w = self.writer.lock().expect("writer lock");
        let now = self.clock.now();
        let canonical = emit_profile(&profile);
        let digest = sha256_hex(canonical.as_bytes());
        if !profile.consent.granted {
            self.audit(
                AuditKind::IngestionRejected,
                None,
                json!({"user_id": profile.user_id, "profile_digest": digest, "reason": "consent_denied"}),
                now,
            )?;
            return Err(ServiceError::ConsentDenied);
        }

        let counter = self.store.list_applications()?.len() + 1;
        let application_id = format!("app-{counter:06}-{}", &digest[..12]);
        let meta = DecisionMeta {
            decision_id: format!("dec-{counter:06}-{}", &digest[..12]),
            user_id: profile.user_id.clone(),
            timestamp: now,
        };
        let eval = self.pipeline.evaluate(&profile, meta)?;
        let decision = eval.decision;
        let status = if decision.verdict.review_required {
            ApplicationStatus::InReview
        } else {
            ApplicationStatus::Decided
        };
        let app = Application {
            application_id: application_id.clone(),
            profile,
            status,
            decision: Some(decision.clone()),
            created: now,
            updated: now,
            reviews: Vec::new(),
        };
        self.store.put_application(&app)?;

        let id = Some(application_id.as_str());
        self.audit(AuditKind::Ingested, id, to_value(&app.profile), now)?;
        self.audit(AuditKind::Scored, id, to_value(&decision), now)?;
        if !decision.verdict.flags.is_empty() {
            self.audit(AuditKind::Flagged, id, to_value(&decision.verdict), now)?;
        }
        Ok(SubmitResponse {
            application_id,
            decision,
        })
    }

    pub fn get_application(&self, id: &str) -> Result<Application, ServiceError> {
        self.load(id)
    }

    /// Grounded explanation for the stored decision. Repeated calls return the
    /// same report; each call is audited.
    pub fn get_explanation(&self, id: &str) -> Result<ExplanationReport, ServiceError> {
        let app = self.load(id)?;
        let decision = app
            .decision
            .as_ref()
            .ok_or_else(|| ServiceError::NotYetDecided(id.to_string()))?;
        let bundle = self.pipeline.features(&app.profile)?;
        let report = self.pipeline.explain(decision, &bundle)?;
        let _w = self.writer.lock().expect("writer lock");
        self.audit(AuditKind::Explained, Some(id), to_value(&report), self.clock.now())?;
        Ok(report)
    }

    /// In-review applications, oldest first.
    pub fn list_review_queue(&self) -> Result<Vec<QueueEntry>, ServiceError> {
        let mut entries: Vec<QueueEntry> = self
            .store
            .list_applications()?
            .into_iter()
            .filter(|a| a.status == ApplicationStatus::InReview)
            .filter_map(|a| {
                let d = a.decision?;
                Some(QueueEntry {
                    application_id: a.application_id,
                    user_id: d.user_id.clone(),
                    band: d.band,
                    verdict: d.verdict.status,
                    flags: d.verdict.flags.iter().map(|f| f.rule_id.clone()).collect(),
                    categories: d.verdict.categories(),
                    status: a.status,
                    created: a.created,
                })
            })
            .collect();
        entries.sort_by(|a, b| a.created.cmp(&b.created).then_with(|| a.application_id.cmp(&b.application_id)));
        Ok(entries)
    }

    pub fn resolve_review(&self, id: &str, mut action: ReviewAction) -> Result<Application, ServiceError> {
        action.validate()?;
        let _w = self.writer.lock().expect("writer lock");
        let mut app = self.load(id)?;
        if app.status != ApplicationStatus::InReview {
            return Err(ServiceError::NotInReview(id.to_string()));
        }
        let now = self.clock.now();
        action.timestamp.get_or_insert(now);
        let decision = app.decision.as_mut().expect("in-review application has a decision");
        let original_band = decision.band;
        match action.action {
            ReviewKind::Approve => app.status = ApplicationStatus::Resolved,
            ReviewKind::OverrideBand => {
                decision.band = action.new_band.expect("validated");
                app.status = ApplicationStatus::Resolved;
            }
            ReviewKind::RequestInfo => {}
        }
        app.updated = now;
        app.reviews.push(action.clone());
        self.store.put_application(&app)?;
        self.audit(
            AuditKind::Reviewed,
            Some(id),
            json!({
                "action": action,
                "original_band": original_band,
                "band": app.decision.as_ref().map(|d| d.band),
                "status": app.status,
            }),
            now,
        )?;
        Ok(app)
    }

    /// Rescores the stored profile without the listed items. The stored
    /// application is never modified.
    pub fn reassess_what_if(&self, id: &str, exclude: &BTreeSet<String>) -> Result<WhatIfResponse, ServiceError> {
        let app = self.load(id)?;
        let original = app
            .decision
            .clone()
            .ok_or_else(|| ServiceError::NotYetDecided(id.to_string()))?;
        let p = &app.profile;
        if let Some(bad) = exclude.iter().find(|x| {
            !p.text_items.iter().any(|t| &t.item_id == *x) && !p.image_items.iter().any(|i| &i.item_id == *x)
        }) {
            return Err(ServiceError::UnknownItemId(bad.clone()));
        }
        let meta = DecisionMeta {
            decision_id: original.decision_id.clone(),
            user_id: original.user_id.clone(),
            timestamp: original.timestamp,
        };
        let hypothetical = self.pipeline.evaluate_without(p, exclude, meta)?.decision;

        let ids = |d: &CreditDecision| -> BTreeSet<String> {
            d.verdict.flags.iter().map(|f| f.rule_id.clone()).collect()
        };
        let (before, after) = (ids(&original), ids(&hypothetical));
        let delta = WhatIfDelta {
            band_changed: original.band != hypothetical.band,
            original_band: original.band,
            hypothetical_band: hypothetical.band,
            normalized_score_change: hypothetical.normalized_score - original.normalized_score,
            original_verdict: original.verdict.status,
            hypothetical_verdict: hypothetical.verdict.status,
            flags_removed: before.difference(&after).cloned().collect(),
            flags_added: after.difference(&before).cloned().collect(),
        };
        let response = WhatIfResponse {
            application_id: id.to_string(),
            excluded: exclude.clone(),
            original,
            hypothetical,
            delta,
        };
        let _w = self.writer.lock().expect("writer lock");
        self.audit(
            AuditKind::Reassessed,
            Some(id),
            json!({"excluded": exclude, "delta": response.delta}),
            self.clock.now(),
        )?;
        Ok(response)
    }

    /// Re-runs the pipeline on the stored profile and compares it with the
    /// decision recorded when the application was scored.
    pub fn replay(&self, id: &str) -> Result<ReplayReport, ServiceError> {
        let app = self.load(id)?;
        let scored: CreditDecision = self
            .store
            .audit_after(0)?
            .into_iter()
            .find(|e| e.kind == AuditKind::Scored && e.application_id.as_deref() == Some(id))
            .and_then(|e| serde_json::from_value(e.payload).ok())
            .ok_or_else(|| ServiceError::NotYetDecided(id.to_string()))?;
        let meta = DecisionMeta {
            decision_id: scored.decision_id.clone(),
            user_id: scored.user_id.clone(),
            timestamp: scored.timestamp,
        };
        let recomputed = self.pipeline.evaluate(&app.profile, meta)?.decision;
        let identical = serde_json::to_vec(&scored).expect("serializes")
            == serde_json::to_vec(&recomputed).expect("serializes");
        Ok(ReplayReport {
            application_id: id.to_string(),
            scored,
            recomputed,
            identical,
        })
    }

    pub fn audit_after(&self, after: u64) -> Result<Vec<AuditEvent>, ServiceError> {
        Ok(self.store.audit_after(after)?)
    }
}
