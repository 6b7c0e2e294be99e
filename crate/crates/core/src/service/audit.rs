//! Audit events and payload digests.

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    Ingested,
    /// A profile document was refused before any state was created.
    IngestionRejected,
    Scored,
    Flagged,
    Explained,
    Reviewed,
    Reassessed,
}

impl AuditKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditKind::Ingested => "ingested",
            AuditKind::IngestionRejected => "ingestion_rejected",
            AuditKind::Scored => "scored",
            AuditKind::Flagged => "flagged",
            AuditKind::Explained => "explained",
            AuditKind::Reviewed => "reviewed",
            AuditKind::Reassessed => "reassessed",
        }
    }
}

impl fmt::Display for AuditKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One immutable line of the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub sequence: u64,
    pub timestamp: DateTime<Utc>,
    pub kind: AuditKind,
    pub application_id: Option<String>,
    /// Hex SHA-256 of the serialized payload.
    pub payload_digest: String,
    pub payload: serde_json::Value,
}

/// An event before the store assigns its sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct NewAuditEvent {
    pub timestamp: DateTime<Utc>,
    pub kind: AuditKind,
    pub application_id: Option<String>,
    pub payload: serde_json::Value,
}

impl NewAuditEvent {
    pub fn into_event(self, sequence: u64) -> AuditEvent {
        AuditEvent {
            sequence,
            timestamp: self.timestamp,
            kind: self.kind,
            application_id: self.application_id,
            payload_digest: digest_json(&self.payload),
            payload: self.payload,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_json(value: &serde_json::Value) -> String {
    sha256_hex(value.to_string().as_bytes())
}

/// True when sequences run 1, 2, 3, ... without gaps.
pub fn is_gapless(events: &[AuditEvent]) -> bool {
    events
        .iter()
        .enumerate()
        .all(|(i, e)| e.sequence == i as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn digest_matches_payload() {
        let e = NewAuditEvent {
            timestamp: "2024-01-01T00:00:00Z".parse().unwrap(),
            kind: AuditKind::Scored,
            application_id: Some("app".into()),
            payload: serde_json::json!({"x": 1}),
        }
        .into_event(1);
        assert_eq!(e.payload_digest, sha256_hex(br#"{"x":1}"#));
        assert!(is_gapless(std::slice::from_ref(&e)));
        let mut e2 = e.clone();
        e2.sequence = 3;
        assert!(!is_gapless(&[e, e2]));
    }
}
