use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::artifact::Artifact;

/// What one stage did. Holds no file paths, so reports from different
/// working directories compare equal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    /// Counts of the stage output when it is a graph, of its rows otherwise.
    pub nodes: usize,
    pub entailment_edges: usize,
    pub structural_edges: usize,
    pub details: Value,
}

impl StageRecord {
    pub fn new(stage: &str, output: &Artifact, details: Value) -> Self {
        let (nodes, entailment_edges, structural_edges) = match output {
            Artifact::Graph(g) => (g.node_count(), g.entailment_count(), g.structural_count()),
            Artifact::Matrix(m) => (m.node_order.len(), 0, 0),
            Artifact::Signal(s) => (s.node_order.len(), 0, 0),
            Artifact::Conclusions(c) => (c.conclusions.len(), 0, 0),
        };
        Self {
            stage: stage.to_owned(),
            nodes,
            entailment_edges,
            structural_edges,
            details,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub stages: Vec<StageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
}

impl PipelineReport {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == name)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
