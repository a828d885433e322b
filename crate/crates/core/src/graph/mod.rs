//! Reasoning-graph data model.
//!
//! A [`ReasoningGraph`] holds propositions ([`NodeRecord`]), directed
//! entailment edges and undirected weighted structural edges. Every pipeline
//! stage consumes one graph and produces a new one; graphs are never mutated
//! once handed to matrix construction.
//!
//! Storage is keyed by node id in ordered maps, so iteration order (and thus
//! every derived matrix) is independent of insertion order.

mod io;
mod matrices;
mod sparse;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{parse_graph, read_graph, write_graph, GraphRecord};
pub use matrices::{build_matrices, laplacian, normalized_laplacian, GraphMatrices, LaplacianKind};
pub use sparse::{sparse_laplacian, CsrMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Original,
    Merged,
    External,
}

impl Provenance {
    pub fn is_original(&self) -> bool {
        matches!(self, Provenance::Original)
    }
}

/// A single proposition and its belief signal entry.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub id: String,
    pub text: String,
    pub belief: f64,
    pub embedding: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl NodeRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, belief: f64) -> Result<Self> {
        let id = id.into();
        check_belief(&id, belief)?;
        Ok(Self {
            id,
            text: text.into(),
            belief,
            embedding: None,
            provenance: Provenance::Original,
        })
    }

    pub fn with_embedding(mut self, embedding: Vec<f64>) -> Self {
        self.embedding = Some(embedding);
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

fn check_belief(id: &str, belief: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&belief) {
        return Err(Error::Input(format!(
            "node {id}: belief {belief} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Directed premise → hypothesis edge. `score` is the entailment probability,
/// absent until the scoring stage has run.
#[derive(Clone, Debug, PartialEq)]
pub struct EntailmentEdge {
    pub premise: String,
    pub hypothesis: String,
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructuralEdge {
    pub a: String,
    pub b: String,
    pub weight: f64,
}

fn unordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReasoningGraph {
    nodes: BTreeMap<String, NodeRecord>,
    entailment: BTreeMap<(String, String), Option<f64>>,
    structural: BTreeMap<(String, String), f64>,
}

impl ReasoningGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn entailment_count(&self) -> usize {
        self.entailment.len()
    }

    pub fn structural_count(&self) -> usize {
        self.structural.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.values()
    }

    pub fn node(&self, id: &str) -> Option<&NodeRecord> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn insert_node(&mut self, node: NodeRecord) -> Result<()> {
        check_belief(&node.id, node.belief)?;
        if self.nodes.contains_key(&node.id) {
            return Err(Error::StructuralIntegrity(format!(
                "duplicate node id {}",
                node.id
            )));
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Inserts the node unless one with the same id is already present.
    /// Returns whether the node was added.
    pub fn insert_node_if_absent(&mut self, node: NodeRecord) -> Result<bool> {
        if self.nodes.contains_key(&node.id) {
            return Ok(false);
        }
        self.insert_node(node)?;
        Ok(true)
    }

    #[cfg(test)]
    pub(crate) fn node_mut(&mut self, id: &str) -> Option<&mut NodeRecord> {
        self.nodes.get_mut(id)
    }

    /// Adds a directed entailment edge. Fails on self-loops and on a second
    /// edge for the same ordered pair.
    pub fn add_entailment(&mut self, premise: &str, hypothesis: &str) -> Result<()> {
        self.add_scored_entailment(premise, hypothesis, None)
    }

    pub fn add_scored_entailment(
        &mut self,
        premise: &str,
        hypothesis: &str,
        score: Option<f64>,
    ) -> Result<()> {
        if premise == hypothesis {
            return Err(Error::StructuralIntegrity(format!(
                "entailment self-loop on {premise}"
            )));
        }
        if let Some(s) = score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Input(format!(
                    "edge {premise}->{hypothesis}: score {s} outside [0, 1]"
                )));
            }
        }
        let key = (premise.to_owned(), hypothesis.to_owned());
        if self.entailment.contains_key(&key) {
            return Err(Error::StructuralIntegrity(format!(
                "duplicate entailment edge {premise}->{hypothesis}"
            )));
        }
        self.entailment.insert(key, score);
        Ok(())
    }

    /// Adds (or reinforces) an undirected structural edge. Parallel edges
    /// collapse to the maximum weight.
    pub fn add_structural(&mut self, a: &str, b: &str, weight: f64) -> Result<()> {
        if a == b {
            return Err(Error::StructuralIntegrity(format!(
                "structural self-loop on {a}"
            )));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::StructuralIntegrity(format!(
                "structural edge {a}--{b}: weight {weight} must be positive"
            )));
        }
        let slot = self.structural.entry(unordered(a, b)).or_insert(weight);
        *slot = slot.max(weight);
        Ok(())
    }

    /// Entailment edges in (premise, hypothesis) order.
    pub fn entailment_edges(&self) -> impl Iterator<Item = EntailmentEdge> + '_ {
        self.entailment.iter().map(|((p, h), s)| EntailmentEdge {
            premise: p.clone(),
            hypothesis: h.clone(),
            score: *s,
        })
    }

    pub fn structural_edges(&self) -> impl Iterator<Item = StructuralEdge> + '_ {
        self.structural.iter().map(|((a, b), w)| StructuralEdge {
            a: a.clone(),
            b: b.clone(),
            weight: *w,
        })
    }

    pub fn structural_weight(&self, a: &str, b: &str) -> Option<f64> {
        self.structural.get(&unordered(a, b)).copied()
    }

    pub fn entailment_score(&self, premise: &str, hypothesis: &str) -> Option<Option<f64>> {
        self.entailment
            .get(&(premise.to_owned(), hypothesis.to_owned()))
            .copied()
    }

    /// Same nodes and structural edges, no entailment edges.
    pub(crate) fn without_entailments(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
            entailment: BTreeMap::new(),
            structural: self.structural.clone(),
        }
    }

    /// Graph-wide embedding dimension, if any node carries an embedding.
    pub fn embedding_dim(&self) -> Option<usize> {
        self.nodes
            .values()
            .find_map(|n| n.embedding.as_ref().map(Vec::len))
    }

    pub fn all_embedded(&self) -> bool {
        self.nodes.values().all(|n| n.embedding.is_some())
    }

    /// Checks every graph invariant: dangling endpoints, belief range,
    /// consistent embedding dimension.
    pub fn validate(&self) -> Result<()> {
        let dim = self.embedding_dim();
        for node in self.nodes.values() {
            check_belief(&node.id, node.belief)?;
            if let (Some(e), Some(d)) = (&node.embedding, dim) {
                if e.len() != d {
                    return Err(Error::StructuralIntegrity(format!(
                        "node {}: embedding dimension {} differs from graph dimension {d}",
                        node.id,
                        e.len()
                    )));
                }
            }
        }
        for (p, h) in self.entailment.keys() {
            for id in [p, h] {
                if !self.nodes.contains_key(id) {
                    return Err(Error::StructuralIntegrity(format!(
                        "entailment edge {p}->{h} references missing node {id}"
                    )));
                }
            }
        }
        for (a, b) in self.structural.keys() {
            for id in [a, b] {
                if !self.nodes.contains_key(id) {
                    return Err(Error::StructuralIntegrity(format!(
                        "structural edge {a}--{b} references missing node {id}"
                    )));
                }
            }
        }
        Ok(())
    }
}
