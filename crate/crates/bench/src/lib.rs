//! Workload generators shared by the benchmarks.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socialcredit_core::knowledge_base::PolicySource;
use socialcredit_core::profile::{Edge, NodeAttrs, Sector, SocialGraph};
use socialcredit_core::PolicyDocument;

const WORDS: [&str; 20] = [
    "riba", "interest", "gharar", "gambling", "casino", "alcohol", "employment", "career",
    "verified", "network", "halal", "finance", "policy", "review", "officer", "risk", "sector",
    "ethical", "income", "tenure",
];

/// Random graph with `n` nodes and about `avg_degree * n / 2` edges.
pub fn random_graph(n: usize, avg_degree: usize, seed: u64) -> SocialGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: BTreeMap<String, NodeAttrs> = (0..n)
        .map(|i| {
            let sector = Sector::ALL[rng.random_range(0..Sector::ALL.len())];
            (format!("n{i}"), NodeAttrs { verified: rng.random_bool(0.5), sector })
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    // a path keeps the graph connected
    for i in 1..n {
        seen.insert((i - 1, i));
        edges.push(Edge::new(format!("n{}", i - 1), format!("n{i}"), rng.random_range(0.1..1.0)));
    }
    let target = (avg_degree * n / 2).max(edges.len());
    while n > 1 && edges.len() < target {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let key = (a.min(b), a.max(b));
        if a != b && seen.insert(key) {
            edges.push(Edge::new(format!("n{}", key.0), format!("n{}", key.1), rng.random_range(0.1..1.0)));
        }
    }
    SocialGraph { nodes, edges }
}

/// `n` synthetic policy documents of 40 to 120 words each.
pub fn random_corpus(n: usize, seed: u64) -> Vec<PolicyDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(40..=120);
            let body: Vec<&str> = (0..len).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            PolicyDocument {
                doc_id: format!("DOC-{i:05}"),
                title: format!("Document {i}"),
                body: body.join(" "),
                tags: BTreeSet::from([WORDS[i % WORDS.len()].to_string()]),
                source: if i % 2 == 0 { PolicySource::ShariaGuideline } else { PolicySource::BankPolicy },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_has_requested_shape() {
        let g = random_graph(200, 6, 1);
        assert_eq!(g.nodes.len(), 200);
        assert_eq!(g.edges.len(), 600);
        assert!(g.edges.iter().all(|e| e.u != e.v));
    }

    #[test]
    fn corpus_ids_are_unique() {
        let docs = random_corpus(50, 2);
        let ids: BTreeSet<_> = docs.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids.len(), 50);
    }
}
