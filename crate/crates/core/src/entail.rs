//! Entailment edge validation: score each directed edge with an
//! [`EntailmentProvider`] and keep those whose probability strictly exceeds
//! `tau_nli`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EntailmentEdge, ReasoningGraph};
use crate::providers::EntailmentProvider;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterConfig {
    pub tau_nli: f64,
}

impl FilterConfig {
    pub fn new(tau_nli: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau_nli) {
            return Err(Error::Config(format!(
                "entailment threshold {tau_nli} outside [0, 1]"
            )));
        }
        Ok(Self { tau_nli })
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { tau_nli: 0.5 }
    }
}

/// A dropped edge, for audit trails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DroppedEdge {
    pub premise: String,
    pub hypothesis: String,
    pub score: f64,
}

/// Scores every entailment edge in one provider batch. On provider failure
/// the error is returned and no scores are written.
pub fn score_edges(
    graph: &ReasoningGraph,
    provider: &dyn EntailmentProvider,
) -> Result<ReasoningGraph> {
    graph.validate()?;
    let edges: Vec<EntailmentEdge> = graph.entailment_edges().collect();
    let pairs: Vec<(&str, &str)> = edges
        .iter()
        .map(|e| {
            let p = graph.node(&e.premise).expect("validated");
            let h = graph.node(&e.hypothesis).expect("validated");
            (p.text.as_str(), h.text.as_str())
        })
        .collect();
    let probs = provider.prob_entail_batch(&pairs)?;
    if probs.len() != edges.len() {
        return Err(Error::Input(format!(
            "entailment provider returned {} scores for {} edges",
            probs.len(),
            edges.len()
        )));
    }
    let mut out = graph.without_entailments();
    for (e, p) in edges.iter().zip(probs) {
        out.add_scored_entailment(&e.premise, &e.hypothesis, Some(p))?;
    }
    Ok(out)
}

/// Keeps entailment edges with `score > tau_nli`. Structural edges and nodes
/// pass through untouched.
pub fn filter_edges(graph: &ReasoningGraph, cfg: FilterConfig) -> Result<ReasoningGraph> {
    Ok(partition_edges(graph, cfg)?.0)
}

/// Like [`filter_edges`], also returning the dropped edges.
pub fn partition_edges(
    graph: &ReasoningGraph,
    cfg: FilterConfig,
) -> Result<(ReasoningGraph, Vec<DroppedEdge>)> {
    let mut out = graph.without_entailments();
    let mut dropped = Vec::new();
    for e in graph.entailment_edges() {
        let score = e.score.ok_or_else(|| {
            Error::StageOrdering(format!(
                "edge {}->{} is unscored; run the score stage first",
                e.premise, e.hypothesis
            ))
        })?;
        if score > cfg.tau_nli {
            out.add_scored_entailment(&e.premise, &e.hypothesis, Some(score))?;
        } else {
            dropped.push(DroppedEdge {
                premise: e.premise,
                hypothesis: e.hypothesis,
                score,
            });
        }
    }
    Ok((out, dropped))
}
