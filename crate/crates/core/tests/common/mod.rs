//! Independent reference implementations used by the integration and
//! acceptance tests. None of these call into the code they check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socialcredit_core::profile::{Edge, NodeAttrs, Sector, SocialGraph};
use socialcredit_core::{Activation, GnnParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> Vec<u8> {
    let path = format!("{}/fixtures/user_{name}.json", env!("CARGO_MANIFEST_DIR"));
    std::fs::read(path).expect("fixture exists")
}

// ---- graph propagation ------------------------------------------------------

/// Random graph with 1..=max_nodes nodes, random attributes and weights.
pub fn random_graph(r: &mut ChaCha8Rng, max_nodes: usize) -> SocialGraph {
    let n = r.random_range(1..=max_nodes);
    let mut nodes = BTreeMap::new();
    for i in 0..n {
        let sector = Sector::ALL[r.random_range(0..Sector::ALL.len())];
        nodes.insert(
            format!("n{i}"),
            NodeAttrs {
                verified: r.random_bool(0.5),
                sector,
            },
        );
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(0.5) {
                edges.push(Edge::new(format!("n{i}"), format!("n{j}"), r.random_range(0.0..2.0)));
            }
        }
    }
    SocialGraph { nodes, edges }
}

pub fn random_params(r: &mut ChaCha8Rng, activation: Activation) -> GnnParams {
    let dim = r.random_range(3..=4);
    let layers = r.random_range(0..=3);
    GnnParams {
        dim,
        layers,
        weight: (0..dim * dim).map(|_| r.random_range(-1.0..1.0)).collect(),
        bias: (0..dim).map(|_| r.random_range(-0.5..0.5)).collect(),
        activation,
    }
}

fn act(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Tanh => x.tanh(),
        Activation::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
        Activation::Identity => x,
    }
}

/// Node ids in matrix row order.
pub fn node_order(g: &SocialGraph) -> Vec<String> {
    g.nodes.keys().cloned().collect()
}

/// Layer-0 embeddings as a dense `n × d` matrix.
pub fn dense_init(g: &SocialGraph, d: usize) -> DMatrix<f64> {
    let ids = node_order(g);
    let deg: Vec<usize> = ids
        .iter()
        .map(|id| g.edges.iter().filter(|e| &e.u == id || &e.v == id).count())
        .collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let mut h = DMatrix::zeros(ids.len(), d);
    for (i, id) in ids.iter().enumerate() {
        let attrs = &g.nodes[id];
        h[(i, 0)] = f64::from(u8::from(attrs.verified));
        h[(i, 1)] = if max_deg == 0 {
            0.0
        } else {
            (deg[i] as f64).ln_1p() / (max_deg as f64).ln_1p()
        };
        h[(i, 2)] = match attrs.sector {
            Sector::GamblingIndustry | Sector::Arms | Sector::Adult => 1.0,
            _ => 0.0,
        };
    }
    h
}

/// Weighted symmetric adjacency without self-loops.
pub fn dense_adjacency(g: &SocialGraph) -> DMatrix<f64> {
    let ids = node_order(g);
    let pos = |s: &str| ids.iter().position(|x| x == s).unwrap();
    let mut a = DMatrix::zeros(ids.len(), ids.len());
    for e in &g.edges {
        let (i, j) = (pos(&e.u), pos(&e.v));
        a[(i, j)] += e.weight;
        a[(j, i)] += e.weight;
    }
    a
}

/// `H_{k+1} = σ(A H_k Wᵀ + 1 bᵀ)`, applied `layers` times.
pub fn dense_propagate(g: &SocialGraph, p: &GnnParams) -> DMatrix<f64> {
    let d = p.dim;
    let a = dense_adjacency(g);
    let w = DMatrix::from_row_slice(d, d, &p.weight);
    let b = DVector::from_column_slice(&p.bias);
    let mut h = dense_init(g, d);
    for _ in 0..p.layers {
        let mut z = &a * &h * w.transpose();
        for mut row in z.row_iter_mut() {
            row += b.transpose();
        }
        h = z.map(|x| act(p.activation, x));
    }
    h
}

// ---- retrieval --------------------------------------------------------------

pub fn fnv1a_reference(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn tokens_reference(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn embed_reference(text: &str, d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    for t in tokens_reference(text) {
        let h = fnv1a_reference(t.as_bytes());
        let sign = if h & (1 << 32) == 0 { 1.0 } else { -1.0 };
        v[(h % d as u64) as usize] += sign;
    }
    let mut ss: f64 = 0.0;
    for x in &v {
        ss += x * x;
    }
    let norm = ss.sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    v
}

pub fn cosine_reference(a: &[f64], b: &[f64]) -> f64 {
    if a.iter().all(|x| *x == 0.0) || b.iter().all(|x| *x == 0.0) {
        return 0.0;
    }
    let mut dot = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
    }
    dot.clamp(-1.0, 1.0)
}

/// Exhaustive scan: score every document, sort by score descending then id
/// ascending, keep `k`.
pub fn retrieve_reference(docs: &[(String, String)], query: &str, d: usize, k: usize) -> Vec<(String, f64)> {
    let q = embed_reference(query, d);
    let mut scored: Vec<(String, f64)> = docs
        .iter()
        .map(|(id, text)| (id.clone(), cosine_reference(&q, &embed_reference(text, d))))
        .collect();
    // insertion sort keeps the comparison logic explicit
    for i in 1..scored.len() {
        let mut j = i;
        while j > 0 && {
            let (a, b) = (&scored[j - 1], &scored[j]);
            b.1 > a.1 || (b.1 == a.1 && b.0 < a.0)
        } {
            scored.swap(j - 1, j);
            j -= 1;
        }
    }
    scored.truncate(k);
    scored
}

pub const WORDS: [&str; 24] = [
    "riba", "interest", "loan", "gharar", "insurance", "gambling", "casino", "alcohol", "wine",
    "network", "verified", "band", "high", "low", "review", "officer", "sector", "ethical",
    "employment", "career", "policy", "finance", "halal", "risk",
];

pub fn random_text(r: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    (0..r.random_range(min..=max))
        .map(|_| WORDS[r.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

// ---- scoring ----------------------------------------------------------------

/// `Σ w·x − λ·F` via nalgebra.
pub fn raw_score_reference(weights: &[f64], features: &[f64], lambda: f64, f: f64) -> f64 {
    DVector::from_column_slice(weights).dot(&DVector::from_column_slice(features)) - lambda * f
}
