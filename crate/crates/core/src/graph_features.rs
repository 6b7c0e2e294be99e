//! Graph trust propagation and ego-network metrics.
//!
//! Message passing follows
//! `h_v^(k+1) = σ(W · Σ_{u ∈ N(v)} w(u,v) · h_u^(k) + b)`, updating every node
//! synchronously from layer-`k` values. No self-loop is added, so an isolated
//! node maps to `σ(b)`.
//!
//! The readout concatenates the ego embedding after `K` layers, the mean of the
//! neighbors' layer-`K` embeddings, and three ego metrics: degree centrality,
//! clustering coefficient and verified-neighbor fraction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{EvidenceRef, Modality};
use crate::profile::{Scope, SocialGraph, SocialProfile};

pub const MAX_LAYERS: usize = 16;
pub const MIN_DIM: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphFeatureError {
    #[error("embedding dimension {0} is below the minimum of {MIN_DIM}")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("layer count {0} exceeds the cap of {MAX_LAYERS}")]
    TooManyLayers(usize),
    #[error("non-finite embedding at node `{node}` layer {layer}")]
    NonFiniteResult { node: String, layer: usize },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }
}

/// Propagation parameters. `weight` is the `dim × dim` matrix in row-major
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnParams {
    pub dim: usize,
    pub layers: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl GnnParams {
    /// `W = scale · I`, `b = 0`.
    pub fn scaled_identity(dim: usize, layers: usize, scale: f64, activation: Activation) -> Self {
        let mut weight = vec![0.0; dim * dim];
        for i in 0..dim {
            weight[i * dim + i] = scale;
        }
        Self {
            dim,
            layers,
            weight,
            bias: vec![0.0; dim],
            activation,
        }
    }

    pub fn validate(&self) -> Result<(), GraphFeatureError> {
        if self.dim < MIN_DIM {
            return Err(GraphFeatureError::DimensionTooSmall(self.dim));
        }
        if self.layers > MAX_LAYERS {
            return Err(GraphFeatureError::TooManyLayers(self.layers));
        }
        if self.weight.len() != self.dim * self.dim {
            return Err(GraphFeatureError::DimensionMismatch(format!(
                "weight has {} entries, expected {}",
                self.weight.len(),
                self.dim * self.dim
            )));
        }
        if self.bias.len() != self.dim {
            return Err(GraphFeatureError::DimensionMismatch(format!(
                "bias has {} entries, expected {}",
                self.bias.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Dimension of the graph readout vector, `2·dim + 3`.
    pub fn readout_dim(&self) -> usize {
        2 * self.dim + 3
    }
}

impl Default for GnnParams {
    fn default() -> Self {
        Self::scaled_identity(8, 2, 0.5, Activation::Tanh)
    }
}

/// Per-node embeddings at one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEmbedding {
    pub layer: usize,
    pub dim: usize,
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl NodeEmbedding {
    pub fn get(&self, node: &str) -> Option<&[f64]> {
        self.vectors.get(node).map(Vec::as_slice)
    }
}

fn sector_risk(g: &SocialGraph, node: &str) -> f64 {
    if g.nodes[node].sector.is_prohibited() {
        1.0
    } else {
        0.0
    }
}

/// Layer-0 embeddings: `[verified, log(1+deg)/log(1+max_deg), sector_risk, 0, …]`.
pub fn init_embeddings(g: &SocialGraph, dim: usize) -> Result<NodeEmbedding, GraphFeatureError> {
    if dim < MIN_DIM {
        return Err(GraphFeatureError::DimensionTooSmall(dim));
    }
    let degrees: BTreeMap<&str, usize> = adjacency(g).into_iter().map(|(n, nb)| (n, nb.len())).collect();
    let max_deg = degrees.values().copied().max().unwrap_or(0);
    let denom = (1.0 + max_deg as f64).ln();
    let vectors = g
        .nodes
        .iter()
        .map(|(id, attrs)| {
            let mut h = vec![0.0; dim];
            h[0] = if attrs.verified { 1.0 } else { 0.0 };
            h[1] = if max_deg == 0 {
                0.0
            } else {
                (1.0 + degrees[id.as_str()] as f64).ln() / denom
            };
            h[2] = sector_risk(g, id);
            (id.clone(), h)
        })
        .collect();
    Ok(NodeEmbedding {
        layer: 0,
        dim,
        vectors,
    })
}

fn adjacency(g: &SocialGraph) -> BTreeMap<&str, Vec<(&str, f64)>> {
    let mut adj: BTreeMap<&str, Vec<(&str, f64)>> =
        g.nodes.keys().map(|n| (n.as_str(), Vec::new())).collect();
    for e in &g.edges {
        adj.entry(e.u.as_str()).or_default().push((e.v.as_str(), e.weight));
        adj.entry(e.v.as_str()).or_default().push((e.u.as_str(), e.weight));
    }
    adj
}

/// One synchronous message-passing layer.
pub fn gnn_step(
    h: &NodeEmbedding,
    g: &SocialGraph,
    params: &GnnParams,
) -> Result<NodeEmbedding, GraphFeatureError> {
    params.validate()?;
    if h.dim != params.dim {
        return Err(GraphFeatureError::DimensionMismatch(format!(
            "embedding dim {} vs params dim {}",
            h.dim, params.dim
        )));
    }
    let d = params.dim;
    let adj = adjacency(g);
    let mut vectors = BTreeMap::new();
    for (node, neighbors) in &adj {
        let mut agg = vec![0.0; d];
        for (u, w) in neighbors {
            let hu = h
                .get(u)
                .ok_or_else(|| GraphFeatureError::UnknownNode(u.to_string()))?;
            for (a, x) in agg.iter_mut().zip(hu) {
                *a += w * x;
            }
        }
        let out: Vec<f64> = (0..d)
            .map(|i| {
                let row = &params.weight[i * d..(i + 1) * d];
                let z: f64 = row.iter().zip(&agg).map(|(w, a)| w * a).sum::<f64>() + params.bias[i];
                params.activation.apply(z)
            })
            .collect();
        if out.iter().any(|x| !x.is_finite()) {
            return Err(GraphFeatureError::NonFiniteResult {
                node: node.to_string(),
                layer: h.layer + 1,
            });
        }
        vectors.insert(node.to_string(), out);
    }
    Ok(NodeEmbedding {
        layer: h.layer + 1,
        dim: d,
        vectors,
    })
}

/// Runs `init_embeddings` followed by `params.layers` propagation steps.
pub fn propagate(g: &SocialGraph, params: &GnnParams) -> Result<NodeEmbedding, GraphFeatureError> {
    params.validate()?;
    let mut h = init_embeddings(g, params.dim)?;
    for _ in 0..params.layers {
        h = gnn_step(&h, g, params)?;
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub degree_centrality: f64,
    pub clustering_coefficient: f64,
    pub verified_neighbor_fraction: f64,
}

pub fn graph_metrics(g: &SocialGraph, ego: &str) -> Result<GraphMetrics, GraphFeatureError> {
    if !g.nodes.contains_key(ego) {
        return Err(GraphFeatureError::UnknownNode(ego.to_string()));
    }
    let neighbors: BTreeSet<&str> = g.neighbors(ego).map(|(n, _)| n).collect();
    let n = g.nodes.len();
    let deg = neighbors.len();
    let degree_centrality = if n > 1 {
        deg as f64 / (n - 1) as f64
    } else {
        0.0
    };
    let clustering_coefficient = if deg < 2 {
        0.0
    } else {
        let nb: Vec<&str> = neighbors.iter().copied().collect();
        let mut closed = 0usize;
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                if g.has_edge(nb[i], nb[j]) {
                    closed += 1;
                }
            }
        }
        2.0 * closed as f64 / (deg * (deg - 1)) as f64
    };
    let verified_neighbor_fraction = if deg == 0 {
        0.0
    } else {
        neighbors.iter().filter(|v| g.nodes[**v].verified).count() as f64 / deg as f64
    };
    Ok(GraphMetrics {
        degree_centrality,
        clustering_coefficient,
        verified_neighbor_fraction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFeatureVector {
    pub ego_embedding: Vec<f64>,
    pub neighbor_mean: Vec<f64>,
    pub degree_centrality: f64,
    pub clustering_coefficient: f64,
    pub verified_neighbor_fraction: f64,
}

impl GraphFeatureVector {
    pub const METRIC_NAMES: [&'static str; 3] = [
        "degree_centrality",
        "clustering_coefficient",
        "verified_neighbor_fraction",
    ];

    pub fn zeros(dim: usize) -> Self {
        Self {
            ego_embedding: vec![0.0; dim],
            neighbor_mean: vec![0.0; dim],
            degree_centrality: 0.0,
            clustering_coefficient: 0.0,
            verified_neighbor_fraction: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.ego_embedding.len() + self.neighbor_mean.len() + 3
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.ego_embedding);
        v.extend_from_slice(&self.neighbor_mean);
        v.extend([
            self.degree_centrality,
            self.clustering_coefficient,
            self.verified_neighbor_fraction,
        ]);
        v
    }

    /// Component names in readout order for embedding dimension `dim`.
    pub fn names(dim: usize) -> Vec<String> {
        (0..dim)
            .map(|i| format!("ego_embedding_{i}"))
            .chain((0..dim).map(|i| format!("neighbor_mean_{i}")))
            .chain(Self::METRIC_NAMES.iter().map(|s| s.to_string()))
            .collect()
    }
}

/// Extracts the graph modality vector for the profile's ego node.
pub fn extract_graph_features(
    profile: &SocialProfile,
    params: &GnnParams,
) -> Result<(GraphFeatureVector, Vec<EvidenceRef>), GraphFeatureError> {
    params.validate()?;
    if !profile.consent.allows(Scope::Graph) {
        return Ok((GraphFeatureVector::zeros(params.dim), Vec::new()));
    }
    let g = &profile.graph;
    let ego = profile.user_id.as_str();
    let metrics = graph_metrics(g, ego)?;
    let h = propagate(g, params)?;

    let ego_embedding = h.get(ego).expect("ego validated above").to_vec();
    let neighbors: BTreeSet<&str> = g.neighbors(ego).map(|(n, _)| n).collect();
    let mut neighbor_mean = vec![0.0; params.dim];
    if !neighbors.is_empty() {
        for n in &neighbors {
            for (m, x) in neighbor_mean.iter_mut().zip(h.get(n).expect("node embedded")) {
                *m += x;
            }
        }
        let k = neighbors.len() as f64;
        neighbor_mean.iter_mut().for_each(|m| *m /= k);
    }

    let evidence = GraphFeatureVector::METRIC_NAMES
        .iter()
        .map(|name| EvidenceRef::new(ego, Modality::Graph, *name, *name))
        .collect();
    Ok((
        GraphFeatureVector {
            ego_embedding,
            neighbor_mean,
            degree_centrality: metrics.degree_centrality,
            clustering_coefficient: metrics.clustering_coefficient,
            verified_neighbor_fraction: metrics.verified_neighbor_fraction,
        },
        evidence,
    ))
}
