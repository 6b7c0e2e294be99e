mod common;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use socialcredit_core::graph_features::{extract_graph_features, graph_metrics, init_embeddings, propagate};
use socialcredit_core::profile::{ConsentRecord, Edge, SocialGraph, SocialProfile};
use socialcredit_core::Activation;

const ACTIVATIONS: [Activation; 3] = [Activation::Tanh, Activation::Relu, Activation::Identity];

#[test]
fn propagation_matches_dense_oracle() {
    let mut r = common::rng(42);
    for case in 0..300 {
        let g = common::random_graph(&mut r, 6);
        let p = common::random_params(&mut r, ACTIVATIONS[case % 3]);
        let got = propagate(&g, &p).unwrap();
        let want = common::dense_propagate(&g, &p);
        assert_eq!(got.layer, p.layers);
        for (i, id) in common::node_order(&g).iter().enumerate() {
            let v = got.get(id).unwrap();
            for j in 0..p.dim {
                assert!(
                    (v[j] - want[(i, j)]).abs() <= 1e-9,
                    "case {case} node {id} component {j}: {} vs {}",
                    v[j],
                    want[(i, j)]
                );
            }
        }
    }
}

#[test]
fn init_matches_dense_oracle() {
    let mut r = common::rng(7);
    for _ in 0..100 {
        let g = common::random_graph(&mut r, 8);
        let h = init_embeddings(&g, 5).unwrap();
        let want = common::dense_init(&g, 5);
        for (i, id) in common::node_order(&g).iter().enumerate() {
            for j in 0..5 {
                assert!((h.get(id).unwrap()[j] - want[(i, j)]).abs() <= 1e-12);
            }
        }
    }
}

fn relabel(g: &SocialGraph, map: &BTreeMap<String, String>) -> SocialGraph {
    SocialGraph {
        nodes: g.nodes.iter().map(|(k, v)| (map[k].clone(), *v)).collect(),
        edges: g
            .edges
            .iter()
            .map(|e| Edge::new(map[&e.u].clone(), map[&e.v].clone(), e.weight))
            .collect(),
    }
}

#[test]
fn relabeling_nodes_permutes_embeddings() {
    let mut r = common::rng(11);
    for case in 0..100 {
        let g = common::random_graph(&mut r, 6);
        let p = common::random_params(&mut r, ACTIVATIONS[case % 3]);
        let ids = common::node_order(&g);
        let mut shuffled = ids.clone();
        shuffled.shuffle(&mut r);
        let map: BTreeMap<String, String> = ids
            .iter()
            .zip(&shuffled)
            .map(|(a, b)| (a.clone(), format!("z{b}")))
            .collect();
        let h = propagate(&g, &p).unwrap();
        let h2 = propagate(&relabel(&g, &map), &p).unwrap();
        for id in &ids {
            let (a, b) = (h.get(id).unwrap(), h2.get(&map[id]).unwrap());
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
        for id in &ids {
            let m1 = graph_metrics(&g, id).unwrap();
            let m2 = graph_metrics(&relabel(&g, &map), &map[id]).unwrap();
            assert_eq!(m1, m2);
        }
    }
}

#[test]
fn readout_uses_ego_row_and_neighbor_mean() {
    let mut r = common::rng(5);
    let mut checked = 0;
    while checked < 50 {
        let g = common::random_graph(&mut r, 6);
        let p = common::random_params(&mut r, Activation::Tanh);
        let ids = common::node_order(&g);
        let ego = ids[0].clone();
        let profile = SocialProfile {
            user_id: ego.clone(),
            display_name: "x".into(),
            consent: ConsentRecord::full("2024-01-01T00:00:00Z".parse().unwrap()),
            text_items: vec![],
            image_items: vec![],
            graph: g.clone(),
        };
        let (v, _) = extract_graph_features(&profile, &p).unwrap();
        let h = common::dense_propagate(&g, &p);
        let nbrs: Vec<usize> = ids
            .iter()
            .enumerate()
            .filter(|(_, id)| g.has_edge(&ego, id))
            .map(|(i, _)| i)
            .collect();
        for j in 0..p.dim {
            assert!((v.ego_embedding[j] - h[(0, j)]).abs() <= 1e-9);
            let mean = if nbrs.is_empty() {
                0.0
            } else {
                nbrs.iter().map(|i| h[(*i, j)]).sum::<f64>() / nbrs.len() as f64
            };
            assert!((v.neighbor_mean[j] - mean).abs() <= 1e-9);
        }
        checked += 1;
    }
}
