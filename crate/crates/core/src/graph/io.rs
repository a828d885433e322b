//! JSONL graph files: one `node`, `edge` or `sedge` record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NodeRecord, Provenance, ReasoningGraph};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphRecord {
    Node {
        id: String,
        text: String,
        belief: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embedding: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Provenance::is_original")]
        provenance: Provenance,
    },
    Edge {
        premise: String,
        hypothesis: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        score: Option<f64>,
    },
    Sedge {
        a: String,
        b: String,
        w: f64,
    },
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<ReasoningGraph> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_graph(BufReader::new(file), &path.display().to_string())
}

/// Parses a graph from JSONL. `source` only labels diagnostics.
pub fn parse_graph(reader: impl BufRead, source: &str) -> Result<ReasoningGraph> {
    let mut graph = ReasoningGraph::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let parse_err = |reason: String| Error::Parse {
            path: source.to_owned(),
            line: lineno,
            reason,
        };
        if idx == 0 && line.starts_with('\u{feff}') {
            return Err(parse_err("byte-order mark not allowed".into()));
        }
        if line.trim().is_empty() {
            continue;
        }
        let record: GraphRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        match record {
            GraphRecord::Node {
                id,
                text,
                belief,
                embedding,
                provenance,
            } => {
                let mut node = NodeRecord::new(id, text, belief)?.with_provenance(provenance);
                node.embedding = embedding;
                graph.insert_node(node)?;
            }
            GraphRecord::Edge {
                premise,
                hypothesis,
                score,
            } => graph.add_scored_entailment(&premise, &hypothesis, score)?,
            GraphRecord::Sedge { a, b, w } => graph.add_structural(&a, &b, w)?,
        }
    }
    graph.validate()?;
    Ok(graph)
}

/// Writes nodes, then entailment edges, then structural edges, each in
/// sorted order.
pub fn write_graph(graph: &ReasoningGraph, mut out: impl Write) -> Result<()> {
    for record in records(graph) {
        serde_json::to_writer(&mut out, &record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn records(graph: &ReasoningGraph) -> impl Iterator<Item = GraphRecord> + '_ {
    let nodes = graph.nodes().map(|n| GraphRecord::Node {
        id: n.id.clone(),
        text: n.text.clone(),
        belief: n.belief,
        embedding: n.embedding.clone(),
        provenance: n.provenance,
    });
    let edges = graph.entailment_edges().map(|e| GraphRecord::Edge {
        premise: e.premise,
        hypothesis: e.hypothesis,
        score: e.score,
    });
    let sedges = graph.structural_edges().map(|e| GraphRecord::Sedge {
        a: e.a,
        b: e.b,
        w: e.weight,
    });
    nodes.chain(edges).chain(sedges)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{"kind":"node","id":"b","text":"fire needs oxygen","belief":0.7}
{"kind":"edge","premise":"a","hypothesis":"b"}

{"kind":"node","id":"a","text":"oxygen helps fire burn","belief":0.9}
{"kind":"sedge","a":"b","b":"a","w":0.5}
"#;

    #[test]
    fn parses_all_record_kinds() {
        let g = parse_graph(SAMPLE.as_bytes(), "sample").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.entailment_count(), 1);
        assert_eq!(g.structural_weight("a", "b"), Some(0.5));
        assert_eq!(g.node("a").unwrap().provenance, Provenance::Original);
    }

    #[test]
    fn write_then_read_is_identity() {
        let mut g = parse_graph(SAMPLE.as_bytes(), "sample").unwrap();
        g.node_mut("a").unwrap().embedding = Some(vec![0.1, -0.30000000000000004]);
        g.node_mut("b").unwrap().embedding = Some(vec![1.0 / 3.0, 2e-300]);
        let mut buf = Vec::new();
        write_graph(&g, &mut buf).unwrap();
        let back = parse_graph(buf.as_slice(), "buf").unwrap();
        assert_eq!(g, back);
        let mut again = Vec::new();
        write_graph(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn dangling_edge_is_structural_error() {
        let text = r#"{"kind":"node","id":"a","text":"x","belief":0.5}
{"kind":"edge","premise":"a","hypothesis":"zz"}"#;
        assert!(matches!(
            parse_graph(text.as_bytes(), "t"),
            Err(Error::StructuralIntegrity(_))
        ));
    }

    #[test]
    fn malformed_line_reports_position() {
        let text = "{\"kind\":\"node\",\"id\":\"a\",\"text\":\"x\",\"belief\":0.5}\n{oops}\n";
        match parse_graph(text.as_bytes(), "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bom_rejected() {
        let text = "\u{feff}{\"kind\":\"node\",\"id\":\"a\",\"text\":\"x\",\"belief\":0.5}\n";
        assert!(matches!(parse_graph(text.as_bytes(), "t"), Err(Error::Parse { .. })));
    }
}
