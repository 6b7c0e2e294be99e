mod common;

use std::collections::BTreeSet;

use chrono::{Duration, TimeZone, Utc};
use socialcredit_core::knowledge_base::default_corpus;
use socialcredit_core::service::{
    audit::is_gapless, ApplicationStatus, AuditKind, FileStore, MemoryStore, ReviewAction,
    ReviewKind, Service, ServiceError, StepClock, Store,
};
use socialcredit_core::{
    parse_profile, Band, ComplianceStatus, KnowledgeBase, Pipeline, RuleCategory,
};

fn clock() -> Box<StepClock> {
    Box::new(StepClock::new(
        Utc.with_ymd_and_hms(2024, 6, 1, 9, 0, 0).unwrap(),
        Duration::seconds(1),
    ))
}

fn service_with(store: Box<dyn Store>) -> Service {
    Service::new(Pipeline::default(), store, clock())
}

fn service() -> Service {
    service_with(Box::new(MemoryStore::new()))
}

fn casino_item(svc: &Service, id: &str) -> String {
    let app = svc.get_application(id).unwrap();
    app.profile
        .image_items
        .iter()
        .find(|i| i.labels.iter().any(|l| l.label == "casino"))
        .unwrap()
        .item_id
        .clone()
}

fn approve() -> ReviewAction {
    ReviewAction {
        reviewer: "officer-1".into(),
        action: ReviewKind::Approve,
        new_band: None,
        note: String::new(),
        timestamp: None,
    }
}

#[test]
fn fixtures_reproduce_expected_outcomes() {
    let svc = service();
    let a = svc.submit_application(&common::fixture("a")).unwrap();
    let b = svc.submit_application(&common::fixture("b")).unwrap();
    let c = svc.submit_application(&common::fixture("c")).unwrap();

    assert_eq!(a.decision.band, Band::High);
    assert_eq!(a.decision.verdict.status, ComplianceStatus::Pass);
    assert_eq!(svc.get_application(&a.application_id).unwrap().status, ApplicationStatus::Decided);

    assert_eq!(b.decision.band, Band::Low);
    assert_eq!(b.decision.verdict.status, ComplianceStatus::Fail);
    assert!(b.decision.verdict.categories().contains(&RuleCategory::AlcoholDrugs));
    assert_eq!(svc.get_application(&b.application_id).unwrap().status, ApplicationStatus::InReview);

    assert_eq!(c.decision.band, Band::Moderate);
    assert_eq!(c.decision.verdict.status, ComplianceStatus::Alert);
    assert_eq!(c.decision.verdict.categories(), vec![RuleCategory::Gambling]);
    let rc = svc.get_explanation(&c.application_id).unwrap();
    assert!(rc.recommendation.is_some());
}

#[test]
fn explanations_cite_flag_categories() {
    let svc = service();
    let kb = KnowledgeBase::build(default_corpus(), 256).unwrap();
    for name in ["b", "c"] {
        let r = svc.submit_application(&common::fixture(name)).unwrap();
        let report = svc.get_explanation(&r.application_id).unwrap();
        for f in &r.decision.verdict.flags {
            assert!(
                report.citations.iter().any(|c| c.subject == f.rule_id
                    && kb.document(&c.doc_id).unwrap().has_tag(f.category.as_str())),
                "{name}: flag {} lacks a citation",
                f.rule_id
            );
        }
        assert!(report.narrative.contains("Non-halal flag"));
    }
    let a = svc.submit_application(&common::fixture("a")).unwrap();
    let report = svc.get_explanation(&a.application_id).unwrap();
    assert!(report.narrative.contains("Score: High"));
    assert!(report.factor_lines[0].starts_with("Job Stability: High"));
    assert!(report.recommendation.is_none());
}

#[test]
fn user_b_cites_alcohol_policy() {
    let svc = service();
    let b = svc.submit_application(&common::fixture("b")).unwrap();
    let report = svc.get_explanation(&b.application_id).unwrap();
    assert!(report.citations.iter().any(|c| c.doc_id == "SG-ALCOHOL-01"));
}

#[test]
fn missing_alcohol_policy_fails_loudly() {
    let mut pipe = Pipeline::default();
    let docs = default_corpus().into_iter().filter(|d| !d.has_tag("alcohol_drugs")).collect();
    pipe.kb = KnowledgeBase::build(docs, 256).unwrap();
    let svc = Service::new(pipe, Box::new(MemoryStore::new()), clock());
    let b = svc.submit_application(&common::fixture("b")).unwrap();
    let err = svc.get_explanation(&b.application_id).unwrap_err();
    assert_eq!(err.code(), "missing_policy_coverage");
    assert_eq!(err.status_code(), 500);
}

#[test]
fn consent_denied_is_audited_and_not_stored() {
    let svc = service();
    let mut p = parse_profile(&common::fixture("a")).unwrap();
    p.consent.granted = false;
    p.consent.scopes.clear();
    let err = svc.submit_profile(p).unwrap_err();
    assert!(matches!(err, ServiceError::ConsentDenied));
    assert_eq!(err.status_code(), 400);
    assert!(svc.list_review_queue().unwrap().is_empty());
    let events = svc.audit_after(0).unwrap();
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].kind, AuditKind::IngestionRejected);
    assert_eq!(events[0].application_id, None);
}

#[test]
fn invalid_documents_are_rejected() {
    let svc = service();
    let err = svc.submit_application(b"{not json").unwrap_err();
    assert_eq!(err.code(), "malformed_document");
    let doc = String::from_utf8(common::fixture("a")).unwrap().replacen("0.95", "1.3", 1);
    let err = svc.submit_application(doc.as_bytes()).unwrap_err();
    assert_eq!(err.code(), "schema_violation");
    assert_eq!(err.status_code(), 400);
    assert!(svc.audit_after(0).unwrap().is_empty());
}

#[test]
fn review_queue_and_resolution() {
    let svc = service();
    assert!(svc.list_review_queue().unwrap().is_empty());
    let a = svc.submit_application(&common::fixture("a")).unwrap();
    let b = svc.submit_application(&common::fixture("b")).unwrap();
    let c = svc.submit_application(&common::fixture("c")).unwrap();
    let q: Vec<String> = svc.list_review_queue().unwrap().into_iter().map(|e| e.application_id).collect();
    assert_eq!(q, vec![b.application_id.clone(), c.application_id.clone()]);

    let err = svc.resolve_review(&a.application_id, approve()).unwrap_err();
    assert!(matches!(err, ServiceError::NotInReview(_)));
    assert_eq!(err.status_code(), 409);

    let mut info = approve();
    info.action = ReviewKind::RequestInfo;
    info.note = "need payslips".into();
    let app = svc.resolve_review(&b.application_id, info).unwrap();
    assert_eq!(app.status, ApplicationStatus::InReview);
    assert_eq!(app.reviews.len(), 1);

    let mut over = approve();
    over.action = ReviewKind::OverrideBand;
    over.new_band = Some(Band::Moderate);
    over.note = "documented exception".into();
    let app = svc.resolve_review(&b.application_id, over).unwrap();
    assert_eq!(app.status, ApplicationStatus::Resolved);
    assert_eq!(app.decision.unwrap().band, Band::Moderate);
    let reviewed = svc.audit_after(0).unwrap().into_iter().rfind(|e| e.kind == AuditKind::Reviewed).unwrap();
    assert_eq!(reviewed.payload["original_band"], "low");

    let q: Vec<String> = svc.list_review_queue().unwrap().into_iter().map(|e| e.application_id).collect();
    assert_eq!(q, vec![c.application_id.clone()]);

    let mut bad = approve();
    bad.action = ReviewKind::OverrideBand;
    bad.new_band = Some(Band::High);
    let err = svc.resolve_review(&c.application_id, bad).unwrap_err();
    assert!(matches!(err, ServiceError::InvalidReview(_)));

    let app = svc.resolve_review(&c.application_id, approve()).unwrap();
    assert_eq!(app.status, ApplicationStatus::Resolved);
    assert_eq!(app.decision.unwrap().band, Band::Moderate);
    assert!(svc.list_review_queue().unwrap().is_empty());
}

#[test]
fn unknown_ids() {
    let svc = service();
    assert!(matches!(svc.get_explanation("app-x"), Err(ServiceError::UnknownApplication(_))));
    assert_eq!(svc.get_application("nope").unwrap_err().status_code(), 404);
    let c = svc.submit_application(&common::fixture("c")).unwrap();
    let err = svc
        .reassess_what_if(&c.application_id, &["ghost".to_string()].into_iter().collect())
        .unwrap_err();
    assert!(matches!(err, ServiceError::UnknownItemId(_)));
}

#[test]
fn what_if_removes_casino_flag_without_mutation() {
    let svc = service();
    let c = svc.submit_application(&common::fixture("c")).unwrap();
    let before = svc.get_application(&c.application_id).unwrap();
    let exclude: BTreeSet<String> = [casino_item(&svc, &c.application_id)].into_iter().collect();
    let w = svc.reassess_what_if(&c.application_id, &exclude).unwrap();
    assert_eq!(w.hypothetical.verdict.status, ComplianceStatus::Pass);
    assert!(matches!(w.hypothetical.band, Band::High | Band::Moderate));
    assert_eq!(w.delta.flags_removed, vec!["R-GMB-1".to_string()]);
    assert!(w.delta.flags_added.is_empty());
    assert_eq!(svc.get_application(&c.application_id).unwrap(), before);

    let same = svc.reassess_what_if(&c.application_id, &BTreeSet::new()).unwrap();
    assert_eq!(same.hypothetical, same.original);
    assert!(!same.delta.band_changed);
    assert_eq!(svc.get_application(&c.application_id).unwrap(), before);
}

#[test]
fn explanations_are_idempotent_and_audited() {
    let svc = service();
    let b = svc.submit_application(&common::fixture("b")).unwrap();
    let n0 = svc.audit_after(0).unwrap().len();
    let r1 = svc.get_explanation(&b.application_id).unwrap();
    let r2 = svc.get_explanation(&b.application_id).unwrap();
    assert_eq!(r1, r2);
    let events = svc.audit_after(n0 as u64).unwrap();
    assert_eq!(events.len(), 2);
    assert!(events.iter().all(|e| e.kind == AuditKind::Explained));
}

#[test]
fn audit_log_is_gapless_and_covers_every_operation() {
    let svc = service();
    let a = svc.submit_application(&common::fixture("a")).unwrap();
    let c = svc.submit_application(&common::fixture("c")).unwrap();
    svc.get_explanation(&a.application_id).unwrap();
    let exclude: BTreeSet<String> = [casino_item(&svc, &c.application_id)].into_iter().collect();
    svc.reassess_what_if(&c.application_id, &exclude).unwrap();
    svc.resolve_review(&c.application_id, approve()).unwrap();
    let events = svc.audit_after(0).unwrap();
    assert!(is_gapless(&events));
    let kinds: Vec<AuditKind> = events.iter().map(|e| e.kind).collect();
    assert_eq!(
        kinds,
        vec![
            AuditKind::Ingested,
            AuditKind::Scored,
            AuditKind::Ingested,
            AuditKind::Scored,
            AuditKind::Flagged,
            AuditKind::Explained,
            AuditKind::Reassessed,
            AuditKind::Reviewed,
        ]
    );
    assert_eq!(svc.audit_after(6).unwrap().len(), 2);
    for e in &events {
        assert_eq!(e.payload_digest, socialcredit_core::service::audit::digest_json(&e.payload));
    }
}

#[test]
fn replay_reproduces_stored_decisions() {
    let svc = service();
    for name in ["a", "b", "c"] {
        let r = svc.submit_application(&common::fixture(name)).unwrap();
        let rep = svc.replay(&r.application_id).unwrap();
        assert!(rep.identical, "{name}");
        assert_eq!(rep.scored, r.decision);
    }
}

#[test]
fn file_store_persists_across_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let (a_id, c_id, decision) = {
        let svc = service_with(Box::new(FileStore::open(dir.path()).unwrap()));
        let a = svc.submit_application(&common::fixture("a")).unwrap();
        let c = svc.submit_application(&common::fixture("c")).unwrap();
        (a.application_id, c.application_id, c.decision)
    };
    let svc = service_with(Box::new(FileStore::open(dir.path()).unwrap()));
    let stored = svc.get_application(&c_id).unwrap();
    assert_eq!(stored.decision.as_ref().unwrap(), &decision);
    assert!(svc.replay(&c_id).unwrap().identical);
    assert!(svc.replay(&a_id).unwrap().identical);
    svc.get_explanation(&a_id).unwrap();
    let events = svc.audit_after(0).unwrap();
    assert!(is_gapless(&events));
    assert_eq!(events.len(), 6);
    assert_eq!(svc.list_review_queue().unwrap().len(), 1);
    assert!(dir.path().join("audit.jsonl").exists());
    assert!(dir.path().join("applications").join(format!("{a_id}.json")).exists());
}

#[test]
fn ids_are_reproducible() {
    let s1 = service();
    let s2 = service();
    for name in ["a", "b"] {
        let x = s1.submit_application(&common::fixture(name)).unwrap();
        let y = s2.submit_application(&common::fixture(name)).unwrap();
        assert_eq!(x.application_id, y.application_id);
        assert_eq!(x.decision, y.decision);
    }
    let x = s1.submit_application(&common::fixture("a")).unwrap();
    assert!(x.application_id.starts_with("app-000003-"));
}
