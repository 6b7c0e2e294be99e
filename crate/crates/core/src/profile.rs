//! Profile data model and the JSON profile document format.
//!
//! A profile document is one JSON object with the top-level keys `user_id`,
//! `display_name`, `consent`, `text_items`, `image_items` and `graph`. A
//! JSONL file holds one such object per line. [`emit_profile`] writes the
//! canonical form: keys in declaration order, lists in input order, graph
//! nodes sorted by id and edges stored with `u < v`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Maximum number of characters in a single text item.
pub const MAX_TEXT_CHARS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("graph has no ego node `{0}`")]
    MissingEgoNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Text,
    Images,
    Graph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsentRecord {
    pub granted: bool,
    pub scopes: BTreeSet<Scope>,
    pub timestamp: DateTime<Utc>,
}

impl ConsentRecord {
    pub fn full(timestamp: DateTime<Utc>) -> Self {
        Self {
            granted: true,
            scopes: [Scope::Text, Scope::Images, Scope::Graph].into_iter().collect(),
            timestamp,
        }
    }

    /// True when consent is granted and covers `scope`.
    pub fn allows(&self, scope: Scope) -> bool {
        self.granted && self.scopes.contains(&scope)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Linkedin,
    Instagram,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextKind {
    Bio,
    Post,
    Comment,
    JobEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextItem {
    pub item_id: String,
    pub source: Source,
    pub kind: TextKind,
    pub text: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageLabel {
    pub label: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageItem {
    pub item_id: String,
    pub source: Source,
    pub labels: Vec<ImageLabel>,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Engineering,
    Finance,
    GamblingIndustry,
    Arms,
    Adult,
    Retail,
    Education,
    Unknown,
}

impl Sector {
    pub const ALL: [Sector; 8] = [
        Sector::Engineering,
        Sector::Finance,
        Sector::GamblingIndustry,
        Sector::Arms,
        Sector::Adult,
        Sector::Retail,
        Sector::Education,
        Sector::Unknown,
    ];

    /// Sectors outside ethical-investment bounds.
    pub fn is_prohibited(self) -> bool {
        matches!(self, Sector::GamblingIndustry | Sector::Arms | Sector::Adult)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sector::Engineering => "engineering",
            Sector::Finance => "finance",
            Sector::GamblingIndustry => "gambling_industry",
            Sector::Arms => "arms",
            Sector::Adult => "adult",
            Sector::Retail => "retail",
            Sector::Education => "education",
            Sector::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeAttrs {
    pub verified: bool,
    pub sector: Sector,
}

/// Undirected weighted edge, serialized as a `[u, v, weight]` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: String,
    pub v: String,
    pub weight: f64,
}

impl Edge {
    /// Builds an edge with endpoints ordered so that `u < v`.
    pub fn new(a: impl Into<String>, b: impl Into<String>, weight: f64) -> Self {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            Self { u: a, v: b, weight }
        } else {
            Self { u: b, v: a, weight }
        }
    }
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(3)?;
        t.serialize_element(&self.u)?;
        t.serialize_element(&self.v)?;
        t.serialize_element(&self.weight)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EdgeVisitor;

        impl<'de> Visitor<'de> for EdgeVisitor {
            type Value = Edge;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an edge triple [u, v, weight]")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Edge, A::Error> {
                let u: String = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let v: String = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                let weight: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(2, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(4, &self));
                }
                Ok(Edge::new(u, v, weight))
            }
        }

        deserializer.deserialize_seq(EdgeVisitor)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocialGraph {
    pub nodes: BTreeMap<String, NodeAttrs>,
    pub edges: Vec<Edge>,
}

impl SocialGraph {
    /// Neighbors of `node` with edge weights, in edge-list order.
    pub fn neighbors<'a>(&'a self, node: &'a str) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.edges.iter().filter_map(move |e| {
            if e.u == node {
                Some((e.v.as_str(), e.weight))
            } else if e.v == node {
                Some((e.u.as_str(), e.weight))
            } else {
                None
            }
        })
    }

    pub fn degree(&self, node: &str) -> usize {
        self.neighbors(node).count()
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        let (u, v) = if a <= b { (a, b) } else { (b, a) };
        self.edges.iter().any(|e| e.u == u && e.v == v)
    }

    fn validate(&self) -> Result<(), ProfileError> {
        let mut seen = HashSet::new();
        for e in &self.edges {
            if e.u == e.v {
                return Err(schema(format!("self-loop on node `{}`", e.u)));
            }
            for end in [&e.u, &e.v] {
                if !self.nodes.contains_key(end) {
                    return Err(schema(format!("edge endpoint `{end}` is not a node")));
                }
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(schema(format!(
                    "edge ({}, {}) has invalid weight {}",
                    e.u, e.v, e.weight
                )));
            }
            if !seen.insert((e.u.as_str(), e.v.as_str())) {
                return Err(schema(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocialProfile {
    pub user_id: String,
    pub display_name: String,
    pub consent: ConsentRecord,
    pub text_items: Vec<TextItem>,
    pub image_items: Vec<ImageItem>,
    pub graph: SocialGraph,
}

impl SocialProfile {
    /// Checks every profile invariant.
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.user_id.is_empty() {
            return Err(schema("user_id must be nonempty"));
        }
        if !self.consent.granted && !self.consent.scopes.is_empty() {
            return Err(schema("consent not granted but scopes are nonempty"));
        }
        let mut ids = HashSet::new();
        for t in &self.text_items {
            if t.item_id.is_empty() || !ids.insert(t.item_id.as_str()) {
                return Err(schema(format!("duplicate or empty item id `{}`", t.item_id)));
            }
            if t.text.chars().count() > MAX_TEXT_CHARS {
                return Err(schema(format!(
                    "text item `{}` exceeds {MAX_TEXT_CHARS} characters",
                    t.item_id
                )));
            }
            if t.kind == TextKind::JobEntry && t.source != Source::Linkedin {
                return Err(schema(format!(
                    "job_entry `{}` must come from linkedin",
                    t.item_id
                )));
            }
        }
        for img in &self.image_items {
            if img.item_id.is_empty() || !ids.insert(img.item_id.as_str()) {
                return Err(schema(format!("duplicate or empty item id `{}`", img.item_id)));
            }
            if img.labels.is_empty() {
                return Err(schema(format!("image `{}` has no labels", img.item_id)));
            }
            for l in &img.labels {
                if !(0.0..=1.0).contains(&l.confidence) {
                    return Err(schema(format!(
                        "label `{}` on image `{}` has confidence {} outside [0, 1]",
                        l.label, img.item_id, l.confidence
                    )));
                }
            }
        }
        self.graph.validate()?;
        if !self.graph.nodes.contains_key(&self.user_id) {
            return Err(ProfileError::MissingEgoNode(self.user_id.clone()));
        }
        Ok(())
    }

    /// True if `item_id` names a text or image item of this profile.
    pub fn has_item(&self, item_id: &str) -> bool {
        self.text_items.iter().any(|t| t.item_id == item_id)
            || self.image_items.iter().any(|i| i.item_id == item_id)
    }

    /// Copy of the profile without the listed content items.
    pub fn without_items(&self, exclude: &BTreeSet<String>) -> SocialProfile {
        let mut p = self.clone();
        p.text_items.retain(|t| !exclude.contains(&t.item_id));
        p.image_items.retain(|i| !exclude.contains(&i.item_id));
        p
    }
}

fn schema(msg: impl Into<String>) -> ProfileError {
    ProfileError::SchemaViolation(msg.into())
}

fn from_json_error(e: serde_json::Error) -> ProfileError {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => ProfileError::SchemaViolation(e.to_string()),
        Category::Syntax | Category::Eof | Category::Io => {
            ProfileError::MalformedDocument(e.to_string())
        }
    }
}

/// Parses and validates a single profile document.
pub fn parse_profile(bytes: &[u8]) -> Result<SocialProfile, ProfileError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ProfileError::MalformedDocument(format!("invalid UTF-8: {e}")))?;
    let profile: SocialProfile = serde_json::from_str(text).map_err(from_json_error)?;
    profile.validate()?;
    Ok(profile)
}

/// Parses a JSONL stream, one profile per nonblank line. User ids must be
/// unique across the stream.
pub fn parse_profiles_jsonl(bytes: &[u8]) -> Result<Vec<SocialProfile>, ProfileError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ProfileError::MalformedDocument(format!("invalid UTF-8: {e}")))?;
    let mut users = HashSet::new();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p = parse_profile(line.as_bytes()).map_err(|e| match e {
            ProfileError::MalformedDocument(m) => {
                ProfileError::MalformedDocument(format!("line {}: {m}", n + 1))
            }
            ProfileError::SchemaViolation(m) => {
                ProfileError::SchemaViolation(format!("line {}: {m}", n + 1))
            }
            other => other,
        })?;
        if !users.insert(p.user_id.clone()) {
            return Err(schema(format!("duplicate user_id `{}`", p.user_id)));
        }
        out.push(p);
    }
    Ok(out)
}

/// Canonical single-line serialization of a profile.
pub fn emit_profile(p: &SocialProfile) -> String {
    serde_json::to_string(p).expect("profile serialization is infallible")
}
