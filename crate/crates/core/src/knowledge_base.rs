//! Policy corpus, feature-hashed embeddings and exhaustive cosine retrieval.
//!
//! Embeddings are signed bag-of-words feature hashes: each token is hashed with
//! 64-bit FNV-1a, lands in bucket `hash mod D` with sign `+1` when bit 32 of
//! the hash is clear (`-1` otherwise), accumulates its term frequency, and the
//! vector is L2-normalized. Retrieval scans every entry, ranks by cosine
//! descending and breaks ties by ascending document id.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenize::tokenize;

pub const DEFAULT_DIM: usize = 256;
pub const DEFAULT_K: usize = 3;

const FNV_OFFSET: u64 = 14695981039346656037;
const FNV_PRIME: u64 = 1099511628211;

const DEFAULT_CORPUS: [&str; 10] = [
    include_str!("../assets/corpus/bp-bands-01.md"),
    include_str!("../assets/corpus/bp-gambling-02.md"),
    include_str!("../assets/corpus/bp-network-01.md"),
    include_str!("../assets/corpus/bp-review-01.md"),
    include_str!("../assets/corpus/bp-stability-01.md"),
    include_str!("../assets/corpus/sg-alcohol-01.md"),
    include_str!("../assets/corpus/sg-ethical-01.md"),
    include_str!("../assets/corpus/sg-gambling-01.md"),
    include_str!("../assets/corpus/sg-gharar-01.md"),
    include_str!("../assets/corpus/sg-riba-01.md"),
];

#[derive(Debug, Error)]
pub enum KbError {
    #[error("embedding dimension {0} must be a power of two and at least 2")]
    InvalidDimension(usize),
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),
    #[error("index is empty")]
    EmptyIndex,
    #[error("k must be positive")]
    InvalidK,
    #[error("invalid policy document{}: {reason}", .origin.as_deref().map(|o| format!(" {o}")).unwrap_or_default())]
    InvalidDocument {
        origin: Option<String>,
        reason: String,
    },
    #[error("I/O error reading corpus: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySource {
    ShariaGuideline,
    BankPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    pub tags: BTreeSet<String>,
    pub source: PolicySource,
}

impl PolicyDocument {
    /// Text that gets embedded for this document.
    pub fn indexed_text(&self) -> String {
        format!("{} {}", self.title, self.body)
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }
}

/// Parses a document with a `---` delimited front-matter header carrying
/// `doc_id`, `title`, `tags` (comma separated) and `source`.
pub fn parse_policy_document(src: &str) -> Result<PolicyDocument, KbError> {
    let invalid = |reason: &str| KbError::InvalidDocument {
        origin: None,
        reason: reason.to_string(),
    };
    let rest = src
        .strip_prefix("---")
        .ok_or_else(|| invalid("missing front matter"))?;
    let (header, body) = rest
        .split_once("\n---")
        .ok_or_else(|| invalid("unterminated front matter"))?;
    let mut fields = BTreeMap::new();
    for line in header.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| invalid("front matter line without `:`"))?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut take = |k: &str| {
        fields
            .remove(k)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| invalid(&format!("missing `{k}`")))
    };
    let doc_id = take("doc_id")?;
    let title = take("title")?;
    let tags = take("tags")?
        .split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect();
    let source = match take("source")?.as_str() {
        "sharia_guideline" => PolicySource::ShariaGuideline,
        "bank_policy" => PolicySource::BankPolicy,
        other => return Err(invalid(&format!("unknown source `{other}`"))),
    };
    let body = body.trim().to_string();
    if body.is_empty() {
        return Err(invalid("empty body"));
    }
    Ok(PolicyDocument {
        doc_id,
        title,
        body,
        tags,
        source,
    })
}

/// Loads every `.md` / `.txt` document in `dir`, ordered by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<PolicyDocument>, KbError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("md") | Some("txt")
                )
        })
        .collect();
    paths.sort();
    let mut ids = BTreeSet::new();
    let mut docs = Vec::with_capacity(paths.len());
    for p in paths {
        let src = std::fs::read_to_string(&p)?;
        let doc = parse_policy_document(&src).map_err(|e| match e {
            KbError::InvalidDocument { reason, .. } => KbError::InvalidDocument {
                origin: Some(p.display().to_string()),
                reason,
            },
            other => other,
        })?;
        if !ids.insert(doc.doc_id.clone()) {
            return Err(KbError::DuplicateDocId(doc.doc_id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// The policy corpus shipped with the crate.
pub fn default_corpus() -> Vec<PolicyDocument> {
    DEFAULT_CORPUS
        .iter()
        .map(|src| parse_policy_document(src).expect("built-in corpus is valid"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub values: Vec<f64>,
}

impl Embedding {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|x| *x == 0.0)
    }

    /// Cosine similarity between two embeddings; 0 if either is all-zero.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        if self.is_zero() || other.is_zero() {
            return 0.0;
        }
        let dot: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        // `+ 0.0` turns a negative zero into zero so it sorts with the other zeros
        dot.clamp(-1.0, 1.0) + 0.0
    }
}

/// Turns text into a fixed-dimension embedding.
pub trait Embedder {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Embedding;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Result<Self, KbError> {
        if dim < 2 || !dim.is_power_of_two() {
            return Err(KbError::InvalidDimension(dim));
        }
        Ok(Self { dim })
    }
}

impl Embedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Embedding {
        let mut values = vec![0.0; self.dim];
        for token in tokenize(text) {
            let h = fnv1a64(token.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            let sign = if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
            values[bucket] += sign;
        }
        let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|x| *x /= norm);
        }
        Embedding { values }
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

pub fn embed_text(text: &str, dim: usize) -> Result<Embedding, KbError> {
    Ok(HashingEmbedder::new(dim)?.embed(text))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorIndex {
    pub dim: usize,
    pub entries: BTreeMap<String, Embedding>,
}

impl VectorIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn index_documents(docs: &[PolicyDocument], dim: usize) -> Result<VectorIndex, KbError> {
    index_with(&HashingEmbedder::new(dim)?, docs)
}

pub fn index_with(embedder: &dyn Embedder, docs: &[PolicyDocument]) -> Result<VectorIndex, KbError> {
    let mut entries = BTreeMap::new();
    for d in docs {
        if entries
            .insert(d.doc_id.clone(), embedder.embed(&d.indexed_text()))
            .is_some()
        {
            return Err(KbError::DuplicateDocId(d.doc_id.clone()));
        }
    }
    Ok(VectorIndex {
        dim: embedder.dim(),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub doc_id: String,
    pub score: f64,
}

/// Top-`k` documents for `query` by cosine similarity.
pub fn retrieve(index: &VectorIndex, query: &str, k: usize) -> Result<Vec<Hit>, KbError> {
    let q = HashingEmbedder::new(index.dim)?.embed(query);
    retrieve_embedding(index, &q, k)
}

pub fn retrieve_embedding(index: &VectorIndex, query: &Embedding, k: usize) -> Result<Vec<Hit>, KbError> {
    if index.is_empty() {
        return Err(KbError::EmptyIndex);
    }
    if k == 0 {
        return Err(KbError::InvalidK);
    }
    let mut hits: Vec<Hit> = index
        .entries
        .iter()
        .map(|(id, e)| Hit {
            doc_id: id.clone(),
            score: query.cosine(e),
        })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    hits.truncate(k);
    Ok(hits)
}

/// Corpus plus its index.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    docs: BTreeMap<String, PolicyDocument>,
    index: VectorIndex,
}

impl KnowledgeBase {
    pub fn build(docs: Vec<PolicyDocument>, dim: usize) -> Result<Self, KbError> {
        let index = index_documents(&docs, dim)?;
        let docs = docs.into_iter().map(|d| (d.doc_id.clone(), d)).collect();
        Ok(Self { docs, index })
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn document(&self, doc_id: &str) -> Option<&PolicyDocument> {
        self.docs.get(doc_id)
    }

    /// Documents ordered by id.
    pub fn documents(&self) -> impl Iterator<Item = &PolicyDocument> {
        self.docs.values()
    }

    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<Hit>, KbError> {
        retrieve(&self.index, query, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, body: &str) -> PolicyDocument {
        PolicyDocument {
            doc_id: id.into(),
            title: format!("title {id}"),
            body: body.into(),
            tags: BTreeSet::new(),
            source: PolicySource::BankPolicy,
        }
    }

    #[test]
    fn fnv_reference_values() {
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn empty_text_embeds_to_zero() {
        let e = embed_text("", 256).unwrap();
        assert!(e.is_zero());
        assert_eq!(e.values.len(), 256);
    }

    #[test]
    fn nonempty_text_is_unit_norm() {
        for s in ["riba", "casino casino bet", "Insurance involves gharar."] {
            let e = embed_text(s, 256).unwrap();
            assert!((e.norm() - 1.0).abs() < 1e-12);
            assert!((e.cosine(&e) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_must_be_power_of_two() {
        assert!(matches!(embed_text("x", 100), Err(KbError::InvalidDimension(100))));
        assert!(matches!(embed_text("x", 1), Err(KbError::InvalidDimension(1))));
        assert!(embed_text("x", 2).is_ok());
    }

    #[test]
    fn index_basics() {
        let idx = index_documents(&[], 64).unwrap();
        assert!(idx.is_empty());
        let docs = vec![doc("a", "alpha"), doc("b", "beta")];
        let idx = index_documents(&docs, 64).unwrap();
        assert_eq!((idx.len(), idx.dim), (2, 64));
        assert_eq!(idx, index_documents(&docs, 64).unwrap());
        let dup = vec![doc("a", "alpha"), doc("a", "beta")];
        assert!(matches!(index_documents(&dup, 64), Err(KbError::DuplicateDocId(_))));
    }

    #[test]
    fn self_match_ranks_first() {
        let docs = default_corpus();
        let idx = index_documents(&docs, 256).unwrap();
        for d in &docs {
            let hits = retrieve(&idx, &d.indexed_text(), 3).unwrap();
            assert_eq!(hits[0].doc_id, d.doc_id);
            assert!((hits[0].score - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn k_larger_than_index_returns_everything_sorted() {
        let docs = vec![doc("b", "apple"), doc("a", "pear"), doc("c", "apple pear")];
        let idx = index_documents(&docs, 64).unwrap();
        let hits = retrieve(&idx, "apple", 10).unwrap();
        assert_eq!(hits.len(), 3);
        assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn zero_query_returns_smallest_ids() {
        let docs = vec![doc("c", "x"), doc("a", "y"), doc("b", "z")];
        let idx = index_documents(&docs, 64).unwrap();
        let hits = retrieve(&idx, "...", 2).unwrap();
        assert_eq!(
            hits,
            vec![
                Hit { doc_id: "a".into(), score: 0.0 },
                Hit { doc_id: "b".into(), score: 0.0 }
            ]
        );
    }

    #[test]
    fn empty_index_and_zero_k() {
        let idx = index_documents(&[], 64).unwrap();
        assert!(matches!(retrieve(&idx, "x", 1), Err(KbError::EmptyIndex)));
        let idx = index_documents(&[doc("a", "x")], 64).unwrap();
        assert!(matches!(retrieve(&idx, "x", 0), Err(KbError::InvalidK)));
    }

    #[test]
    fn default_corpus_covers_rule_categories() {
        let docs = default_corpus();
        for tag in ["riba", "gharar", "gambling", "alcohol_drugs", "ethical_investment"] {
            assert!(docs.iter().any(|d| d.has_tag(tag)), "no document tagged {tag}");
        }
        assert_eq!(docs.iter().filter(|d| d.has_tag("alcohol_drugs")).count(), 1);
    }

    #[test]
    fn alcohol_query_finds_alcohol_guideline() {
        let kb = KnowledgeBase::build(default_corpus(), 256).unwrap();
        let hits = kb.retrieve("alcohol drugs image liquor", 3).unwrap();
        assert_eq!(hits[0].doc_id, "SG-ALCOHOL-01");
    }

    #[test]
    fn front_matter_parsing() {
        let d = parse_policy_document(
            "---\ndoc_id: X-1\ntitle: T\ntags: a, b\nsource: bank_policy\n---\nBody text.\n",
        )
        .unwrap();
        assert_eq!(d.doc_id, "X-1");
        assert_eq!(d.tags.len(), 2);
        assert_eq!(d.body, "Body text.");
        assert!(parse_policy_document("no header").is_err());
        assert!(parse_policy_document("---\ndoc_id: X\n---\nbody").is_err());
        assert!(parse_policy_document(
            "---\ndoc_id: X-1\ntitle: T\ntags: a\nsource: blog\n---\nBody"
        )
        .is_err());
    }

    #[test]
    fn corpus_directory_loading() {
        let dir = tempfile::tempdir().unwrap();
        for (i, src) in DEFAULT_CORPUS.iter().enumerate() {
            std::fs::write(dir.path().join(format!("{i:02}.md")), src).unwrap();
        }
        std::fs::write(dir.path().join("README"), "ignored").unwrap();
        let docs = load_corpus(dir.path()).unwrap();
        assert_eq!(docs.len(), DEFAULT_CORPUS.len());
        std::fs::write(dir.path().join("99.md"), DEFAULT_CORPUS[0]).unwrap();
        assert!(matches!(load_corpus(dir.path()), Err(KbError::DuplicateDocId(_))));
    }
}
