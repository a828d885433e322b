#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nsr_core::align::{Entity, KnowledgeGraph};
use nsr_core::graph::{NodeRecord, ReasoningGraph};
use rand::Rng;

pub fn node_id(i: usize) -> String {
    format!("v{i:03}")
}

/// Random graph on `n` nodes mixing entailment and weighted structural edges.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> ReasoningGraph {
    let mut g = ReasoningGraph::new();
    for i in 0..n {
        let belief = rng.random_range(0.0..=1.0);
        g.insert_node(NodeRecord::new(node_id(i), format!("statement {i}"), belief).unwrap())
            .unwrap();
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || !rng.random_bool(p / 2.0) {
                continue;
            }
            if rng.random_bool(0.5) {
                let _ = g.add_entailment(&node_id(i), &node_id(j));
            } else {
                let w = rng.random_range(0.1..2.0);
                g.add_structural(&node_id(i), &node_id(j), w).unwrap();
            }
        }
    }
    g
}

/// Undirected adjacency over entailment and structural edges.
pub fn adjacency(g: &ReasoningGraph) -> BTreeMap<String, BTreeSet<String>> {
    let mut adj: BTreeMap<String, BTreeSet<String>> =
        g.node_ids().map(|id| (id.to_owned(), BTreeSet::new())).collect();
    let pairs = g
        .entailment_edges()
        .map(|e| (e.premise, e.hypothesis))
        .chain(g.structural_edges().map(|e| (e.a, e.b)));
    for (a, b) in pairs {
        adj.get_mut(&a).unwrap().insert(b.clone());
        adj.get_mut(&b).unwrap().insert(a);
    }
    adj
}

/// Connected components by breadth-first search, each sorted, in order of
/// their smallest member.
pub fn bfs_components(adj: &BTreeMap<String, BTreeSet<String>>) -> Vec<Vec<String>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for start in adj.keys() {
        if !seen.insert(start.clone()) {
            continue;
        }
        let mut comp = vec![start.clone()];
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(v) = queue.pop_front() {
            for w in &adj[&v] {
                if seen.insert(w.clone()) {
                    comp.push(w.clone());
                    queue.push_back(w.clone());
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out
}

pub fn unit(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Nodes with embeddings scattered around a few random centres, so that
/// similarity thresholds produce non-trivial clusterings.
pub fn clustered_graph(rng: &mut impl Rng, n: usize, dim: usize) -> ReasoningGraph {
    let centres: Vec<Vec<f64>> = (0..(n / 4).max(1))
        .map(|_| unit((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    let mut g = ReasoningGraph::new();
    for i in 0..n {
        let c = &centres[rng.random_range(0..centres.len())];
        let noise = rng.random_range(0.0..0.6);
        let e = unit(c.iter().map(|x| x + noise * rng.random_range(-1.0..1.0)).collect());
        let belief = rng.random_range(0.0..=1.0);
        g.insert_node(
            NodeRecord::new(node_id(i), format!("statement {i}"), belief)
                .unwrap()
                .with_embedding(e),
        )
        .unwrap();
    }
    for _ in 0..n {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            let _ = g.add_scored_entailment(&node_id(a), &node_id(b), Some(rng.random_range(0.0..=1.0)));
        }
    }
    g
}

const WORDS: [&str; 12] = [
    "fire", "oxygen", "water", "candle", "room", "air", "heat", "smoke", "wax", "burn", "cold", "light",
];

pub fn random_phrase(rng: &mut impl Rng) -> String {
    let k = rng.random_range(1..=3);
    (0..k)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn random_kg(rng: &mut impl Rng, entities: usize, relations: usize) -> KnowledgeGraph {
    let mut kg = KnowledgeGraph::new();
    for i in 0..entities {
        kg.add_entity(Entity {
            id: format!("e{i:03}"),
            label: random_phrase(rng),
            embedding: None,
        })
        .unwrap();
    }
    for _ in 0..relations {
        let (a, b) = (rng.random_range(0..entities), rng.random_range(0..entities));
        if a != b {
            kg.add_relation(&format!("e{a:03}"), &format!("e{b:03}"), "RelatedTo").unwrap();
        }
    }
    kg
}

pub fn demo_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo")
}

/// Mirrors fixtures/demo/config.toml.
pub fn demo_config() -> nsr_core::pipeline::PipelineConfig {
    nsr_core::pipeline::PipelineConfig {
        merge_threshold: 0.85,
        entail_threshold: 0.5,
        align_lambda: 0.5,
        align_radius: 1,
        align_min_match: 0.4,
        cheb_order: 4,
        tau_out: Some(0.5),
        kg: Some(demo_dir().join("kg.jsonl")),
        ..Default::default()
    }
}
