//! Semantic node merging.
//!
//! Nodes whose embeddings have cosine similarity strictly above δ are
//! redundant. Redundancy is closed transitively (connected components of the
//! `> δ` relation), and each component collapses into one supernode carrying
//! the mean belief and the re-normalized mean embedding. Edges follow their
//! endpoints onto the supernode.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{NodeRecord, Provenance, ReasoningGraph};

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    pub values: DMatrix<f64>,
    pub node_order: Vec<String>,
}

/// Partition of node ids. Members of each cluster are sorted, and clusters
/// are ordered by their first (smallest) member.
#[derive(Clone, Debug, PartialEq)]
pub struct MergePlan {
    pub clusters: Vec<Vec<String>>,
    pub threshold: f64,
}

impl MergePlan {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn multi_member(&self) -> impl Iterator<Item = &Vec<String>> {
        self.clusters.iter().filter(|c| c.len() > 1)
    }

    /// Maps every node id to the id of the supernode that replaces it.
    pub fn representatives(&self) -> BTreeMap<String, String> {
        self.clusters
            .iter()
            .flat_map(|c| c.iter().map(move |m| (m.clone(), c[0].clone())))
            .collect()
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::DegenerateEmbedding("zero-norm vector in cosine".into()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

pub fn similarity_matrix(graph: &ReasoningGraph) -> Result<SimilarityMatrix> {
    let nodes: Vec<&NodeRecord> = graph.nodes().collect();
    let embeddings = nodes
        .iter()
        .map(|n| {
            n.embedding.as_deref().ok_or_else(|| {
                Error::StageOrdering(format!(
                    "node {} has no embedding; run the embed stage first",
                    n.id
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = nodes.len();
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s = cosine(embeddings[i], embeddings[j])?;
            values[(i, j)] = s;
            values[(j, i)] = s;
        }
    }
    Ok(SimilarityMatrix {
        values,
        node_order: nodes.iter().map(|n| n.id.clone()).collect(),
    })
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root so roots track sorted order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

pub fn plan_merge(sim: &SimilarityMatrix, delta: f64) -> Result<MergePlan> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Config(format!("merge threshold {delta} outside [0, 1]")));
    }
    let n = sim.node_order.len();
    let mut dsu = DisjointSet::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if sim.values[(i, j)] > delta {
                dsu.union(i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for i in 0..n {
        let root = dsu.find(i);
        groups.entry(root).or_default().push(sim.node_order[i].clone());
    }
    let mut clusters: Vec<Vec<String>> = groups
        .into_values()
        .map(|mut c| {
            c.sort();
            c
        })
        .collect();
    clusters.sort();
    Ok(MergePlan {
        clusters,
        threshold: delta,
    })
}

/// Replaces each multi-member cluster by a supernode. The supernode keeps the
/// smallest member id and that member's text.
pub fn apply_merge(graph: &ReasoningGraph, plan: &MergePlan) -> Result<ReasoningGraph> {
    let rep = plan.representatives();
    let covered = plan.clusters.iter().map(Vec::len).sum::<usize>();
    if covered != rep.len()
        || rep.len() != graph.node_count()
        || graph.node_ids().any(|id| !rep.contains_key(id))
    {
        return Err(Error::Input(
            "merge plan does not partition the graph's node ids".into(),
        ));
    }

    let mut out = ReasoningGraph::new();
    for cluster in &plan.clusters {
        let members: Vec<&NodeRecord> = cluster
            .iter()
            .map(|id| graph.node(id).expect("checked above"))
            .collect();
        if members.len() == 1 {
            out.insert_node(members[0].clone())?;
            continue;
        }
        let k = members.len() as f64;
        let belief = (members.iter().map(|m| m.belief).sum::<f64>() / k).clamp(0.0, 1.0);
        let embedding = mean_embedding(&members);
        let mut node = NodeRecord::new(cluster[0].clone(), members[0].text.clone(), belief)?
            .with_provenance(Provenance::Merged);
        node.embedding = embedding;
        out.insert_node(node)?;
    }

    // collapsed parallel entailments keep their best score
    let mut entail: BTreeMap<(String, String), Option<f64>> = BTreeMap::new();
    for e in graph.entailment_edges() {
        let (p, h) = (rep[&e.premise].clone(), rep[&e.hypothesis].clone());
        if p == h {
            continue;
        }
        entail
            .entry((p, h))
            .and_modify(|s| {
                *s = match (*s, e.score) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                }
            })
            .or_insert(e.score);
    }
    for ((p, h), s) in entail {
        out.add_scored_entailment(&p, &h, s)?;
    }
    for e in graph.structural_edges() {
        let (a, b) = (&rep[&e.a], &rep[&e.b]);
        if a != b {
            out.add_structural(a, b, e.weight)?;
        }
    }
    Ok(out)
}

fn mean_embedding(members: &[&NodeRecord]) -> Option<Vec<f64>> {
    let vecs: Vec<&Vec<f64>> = members
        .iter()
        .map(|m| m.embedding.as_ref())
        .collect::<Option<_>>()?;
    let mut acc = vec![0.0; vecs[0].len()];
    for v in &vecs {
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += x;
        }
    }
    let k = vecs.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        acc.iter_mut().for_each(|a| *a /= norm);
        Some(acc)
    } else {
        // members cancel out exactly; fall back to the representative's vector
        Some(vecs[0].clone())
    }
}
