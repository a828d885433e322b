//! Knowledge-graph alignment.
//!
//! Each internal node is matched to the external entity maximizing
//! `λ·cos(f(node), f(entity)) + (1−λ)·jaccard(text, label)`. The radius-r
//! neighbourhood of every match is imported: entities become external nodes,
//! relations become unit structural edges, and an anchor edge ties the
//! internal node to its match.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeRecord, Provenance, ReasoningGraph};
use crate::merge::cosine;
use crate::providers::EmbeddingProvider;
use crate::text::token_set;

/// Prefix applied to entity ids when they are imported as graph nodes.
pub const EXTERNAL_PREFIX: &str = "kg:";

/// Belief given to imported entities.
pub const EXTERNAL_BELIEF: f64 = 0.5;

pub fn external_node_id(entity: &str) -> String {
    format!("{EXTERNAL_PREFIX}{entity}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entity {
    pub id: String,
    pub label: String,
    pub embedding: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Relation {
    pub a: String,
    pub b: String,
    pub kind: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KnowledgeGraph {
    entities: BTreeMap<String, Entity>,
    relations: Vec<Relation>,
    neighbours: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KgRecord {
    Entity {
        id: String,
        label: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embedding: Option<Vec<f64>>,
    },
    Rel {
        a: String,
        b: String,
        #[serde(rename = "type")]
        relation: String,
    },
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Entities in ascending id order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn add_entity(&mut self, entity: Entity) -> Result<()> {
        if self.entities.contains_key(&entity.id) {
            return Err(Error::StructuralIntegrity(format!(
                "duplicate entity id {}",
                entity.id
            )));
        }
        self.entities.insert(entity.id.clone(), entity);
        Ok(())
    }

    /// Adds an undirected relation. Both endpoints must already exist.
    pub fn add_relation(&mut self, a: &str, b: &str, kind: &str) -> Result<()> {
        for id in [a, b] {
            if !self.entities.contains_key(id) {
                return Err(Error::StructuralIntegrity(format!(
                    "relation {a}--{b} references missing entity {id}"
                )));
            }
        }
        if a == b {
            return Err(Error::StructuralIntegrity(format!("relation self-loop on {a}")));
        }
        self.relations.push(Relation {
            a: a.to_owned(),
            b: b.to_owned(),
            kind: kind.to_owned(),
        });
        self.neighbours.entry(a.to_owned()).or_default().insert(b.to_owned());
        self.neighbours.entry(b.to_owned()).or_default().insert(a.to_owned());
        Ok(())
    }

    /// Copy with every missing entity embedding filled in from `provider`.
    pub fn with_embeddings(&self, provider: &dyn EmbeddingProvider) -> Result<Self> {
        let missing: Vec<&Entity> = self.entities().filter(|e| e.embedding.is_none()).collect();
        let labels: Vec<&str> = missing.iter().map(|e| e.label.as_str()).collect();
        let vectors = provider.embed_batch(&labels)?;
        let mut out = self.clone();
        for (e, v) in missing.iter().zip(vectors) {
            out.entities.get_mut(&e.id).expect("present").embedding = Some(v);
        }
        Ok(out)
    }
}

pub fn read_kg(path: impl AsRef<Path>) -> Result<KnowledgeGraph> {
    let path = path.as_ref();
    parse_kg(BufReader::new(File::open(path)?), &path.display().to_string())
}

/// Relations may precede the entities they reference.
pub fn parse_kg(reader: impl BufRead, source: &str) -> Result<KnowledgeGraph> {
    let mut kg = KnowledgeGraph::new();
    let mut rels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: KgRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: source.to_owned(),
            line: idx + 1,
            reason: e.to_string(),
        })?;
        match record {
            KgRecord::Entity {
                id,
                label,
                embedding,
            } => kg.add_entity(Entity {
                id,
                label,
                embedding,
            })?,
            KgRecord::Rel { a, b, relation } => rels.push((a, b, relation)),
        }
    }
    for (a, b, kind) in rels {
        kg.add_relation(&a, &b, &kind)?;
    }
    Ok(kg)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignConfig {
    pub lambda_mix: f64,
    pub radius: usize,
    pub min_match: f64,
}

impl AlignConfig {
    pub fn new(lambda_mix: f64, radius: usize, min_match: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda_mix) {
            return Err(Error::Config(format!("align lambda {lambda_mix} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&min_match) {
            return Err(Error::Config(format!("align min-match {min_match} outside [0, 1]")));
        }
        Ok(Self {
            lambda_mix,
            radius,
            min_match,
        })
    }
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            lambda_mix: 0.5,
            radius: 1,
            min_match: 0.5,
        }
    }
}

/// Token-set Jaccard index; two empty sets count as identical.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let (ta, tb) = (token_set(a), token_set(b));
    let union = ta.union(&tb).count();
    if union == 0 {
        return 1.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

pub fn hybrid_sim(
    node: &NodeRecord,
    entity: &Entity,
    cfg: &AlignConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<f64> {
    let node_vec = node.embedding.as_deref().ok_or_else(|| {
        Error::StageOrdering(format!("node {} has no embedding; run the embed stage first", node.id))
    })?;
    let computed;
    let entity_vec = match &entity.embedding {
        Some(v) => v.as_slice(),
        None => {
            computed = provider.embed(&entity.label)?;
            computed.as_slice()
        }
    };
    let cos = cosine(node_vec, entity_vec)?;
    Ok(cfg.lambda_mix * cos + (1.0 - cfg.lambda_mix) * jaccard(&node.text, &entity.label))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Match {
    pub entity: String,
    pub score: f64,
}

/// Highest-scoring entity, ties to the smallest id. `None` when the KG is
/// empty or the best score is below `min_match`.
pub fn match_node(
    node: &NodeRecord,
    kg: &KnowledgeGraph,
    cfg: &AlignConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<Option<Match>> {
    let mut best: Option<Match> = None;
    for entity in kg.entities() {
        let score = hybrid_sim(node, entity, cfg, provider)?;
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(Match {
                entity: entity.id.clone(),
                score,
            });
        }
    }
    Ok(best.filter(|m| m.score >= cfg.min_match))
}

/// Entities within `radius` hops of `root`, with every relation whose two
/// endpoints are both inside that set.
pub fn neighborhood(
    kg: &KnowledgeGraph,
    root: &str,
    radius: usize,
) -> Result<(BTreeSet<String>, Vec<Relation>)> {
    if kg.entity(root).is_none() {
        return Err(Error::Lookup(root.to_owned()));
    }
    let mut seen = BTreeSet::from([root.to_owned()]);
    let mut queue = VecDeque::from([(root.to_owned(), 0usize)]);
    while let Some((id, depth)) = queue.pop_front() {
        if depth == radius {
            continue;
        }
        for next in kg.neighbours.get(&id).into_iter().flatten() {
            if seen.insert(next.clone()) {
                queue.push_back((next.clone(), depth + 1));
            }
        }
    }
    let rels = kg
        .relations
        .iter()
        .filter(|r| seen.contains(&r.a) && seen.contains(&r.b))
        .cloned()
        .collect();
    Ok((seen, rels))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AlignReport {
    pub matches: Vec<NodeMatch>,
    pub unmatched: Vec<String>,
    pub imported_entities: usize,
    pub imported_relations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeMatch {
    pub node: String,
    pub entity: String,
    pub score: f64,
}

pub fn augment(
    graph: &ReasoningGraph,
    kg: &KnowledgeGraph,
    cfg: &AlignConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<ReasoningGraph> {
    Ok(augment_with_report(graph, kg, cfg, provider)?.0)
}

/// Aligns every non-external node and unions the matched neighbourhoods into
/// the graph. Imports are keyed by entity id, so repeating the call is a
/// no-op.
pub fn augment_with_report(
    graph: &ReasoningGraph,
    kg: &KnowledgeGraph,
    cfg: &AlignConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<(ReasoningGraph, AlignReport)> {
    let mut report = AlignReport::default();
    if kg.is_empty() {
        return Ok((graph.clone(), report));
    }
    let kg = kg.with_embeddings(provider)?;
    let mut out = graph.clone();
    let before_edges = out.structural_count();

    for node in graph.nodes().filter(|n| n.provenance != Provenance::External) {
        let Some(m) = match_node(node, &kg, cfg, provider)? else {
            report.unmatched.push(node.id.clone());
            continue;
        };
        let (entities, relations) = neighborhood(&kg, &m.entity, cfg.radius)?;
        for id in &entities {
            let entity = kg.entity(id).expect("neighbourhood stays inside the KG");
            let mut record = NodeRecord::new(external_node_id(id), entity.label.clone(), EXTERNAL_BELIEF)?
                .with_provenance(Provenance::External);
            record.embedding = entity.embedding.clone();
            if out.insert_node_if_absent(record)? {
                report.imported_entities += 1;
            }
        }
        for rel in &relations {
            out.add_structural(&external_node_id(&rel.a), &external_node_id(&rel.b), 1.0)?;
        }
        out.add_structural(&node.id, &external_node_id(&m.entity), 1.0)?;
        report.matches.push(NodeMatch {
            node: node.id.clone(),
            entity: m.entity,
            score: m.score,
        });
    }
    report.imported_relations = out.structural_count() - before_edges;
    Ok((out, report))
}
