//! File artifacts exchanged between stages.
//!
//! Every artifact is JSON or JSONL and carries a `kind` tag, so a stage can
//! tell what it was handed. Graph files hold `node`/`edge`/`sedge` records; the
//! others are a single `matrix` or `signal` object, or a run of `conclusion`
//! records closed by a `summary`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{parse_graph, write_graph, LaplacianKind, ReasoningGraph};
use crate::inference::Conclusion;
use crate::spectral::ChebFilter;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArtifactKind {
    Graph,
    Matrix,
    Signal,
    Conclusions,
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArtifactKind::Graph => "graph",
            ArtifactKind::Matrix => "matrix",
            ArtifactKind::Signal => "signal",
            ArtifactKind::Conclusions => "conclusions",
        })
    }
}

/// Dense Laplacian, one JSON array per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixArtifact {
    pub variant: LaplacianKind,
    pub node_order: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Belief signal before and after spectral filtering, aligned with
/// `node_order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalArtifact {
    pub node_order: Vec<String>,
    pub texts: Vec<String>,
    pub belief_in: Vec<f64>,
    pub belief_out: Vec<f64>,
    pub filter: ChebFilter,
    pub laplacian: LaplacianKind,
    pub propagator: String,
    /// Threshold resolved by the spectral stage.
    pub tau_out: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConclusionSet {
    pub conclusions: Vec<Conclusion>,
    pub tau_out: f64,
}

impl ConclusionSet {
    pub fn asserted(&self) -> usize {
        self.conclusions.iter().filter(|c| c.asserted).count()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Tagged {
    Matrix(MatrixArtifact),
    Signal(SignalArtifact),
    Conclusion(Conclusion),
    Summary {
        nodes: usize,
        asserted: usize,
        tau_out: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    Graph(ReasoningGraph),
    Matrix(MatrixArtifact),
    Signal(SignalArtifact),
    Conclusions(ConclusionSet),
}

impl Artifact {
    pub fn kind(&self) -> ArtifactKind {
        match self {
            Artifact::Graph(_) => ArtifactKind::Graph,
            Artifact::Matrix(_) => ArtifactKind::Matrix,
            Artifact::Signal(_) => ArtifactKind::Signal,
            Artifact::Conclusions(_) => ArtifactKind::Conclusions,
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Detects the artifact kind from the first record. An empty document is
    /// an empty graph.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let Some((idx, first)) = text
            .lines()
            .enumerate()
            .find(|(_, l)| !l.trim().is_empty())
        else {
            return Ok(Artifact::Graph(ReasoningGraph::new()));
        };
        let parse_err = |line: usize, reason: String| Error::Parse {
            path: source.to_owned(),
            line,
            reason,
        };
        let head: serde_json::Value = serde_json::from_str(first.trim_start_matches('\u{feff}'))
            .map_err(|e| parse_err(idx + 1, e.to_string()))?;
        let kind = head.get("kind").and_then(|k| k.as_str()).unwrap_or_default();
        match kind {
            "node" | "edge" | "sedge" => Ok(Artifact::Graph(parse_graph(text.as_bytes(), source)?)),
            "matrix" | "signal" => {
                match serde_json::from_str(text.trim()).map_err(|e| parse_err(idx + 1, e.to_string()))? {
                    Tagged::Matrix(m) => Ok(Artifact::Matrix(m)),
                    Tagged::Signal(s) => Ok(Artifact::Signal(s)),
                    _ => unreachable!("kind checked above"),
                }
            }
            "conclusion" | "summary" => parse_conclusions(text, source),
            other => Err(parse_err(idx + 1, format!("unknown artifact kind {other:?}"))),
        }
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        match self {
            Artifact::Graph(g) => write_graph(g, out),
            Artifact::Matrix(m) => write_line(&mut out, &Tagged::Matrix(m.clone())),
            Artifact::Signal(s) => write_line(&mut out, &Tagged::Signal(s.clone())),
            Artifact::Conclusions(set) => {
                for c in &set.conclusions {
                    write_line(&mut out, &Tagged::Conclusion(c.clone()))?;
                }
                write_line(
                    &mut out,
                    &Tagged::Summary {
                        nodes: set.conclusions.len(),
                        asserted: set.asserted(),
                        tau_out: set.tau_out,
                    },
                )
            }
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn into_graph(self, stage: &str) -> Result<ReasoningGraph> {
        match self {
            Artifact::Graph(g) => Ok(g),
            other => Err(wrong_kind(stage, ArtifactKind::Graph, other.kind())),
        }
    }

    pub fn into_signal(self, stage: &str) -> Result<SignalArtifact> {
        match self {
            Artifact::Signal(s) => Ok(s),
            other => Err(wrong_kind(stage, ArtifactKind::Signal, other.kind())),
        }
    }
}

fn wrong_kind(stage: &str, want: ArtifactKind, got: ArtifactKind) -> Error {
    Error::StageOrdering(format!("stage {stage} expects a {want} artifact, got {got}"))
}

fn write_line(out: &mut impl Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn parse_conclusions(text: &str, source: &str) -> Result<Artifact> {
    let mut conclusions = Vec::new();
    let mut tau_out = None;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: source.to_owned(),
            line: idx + 1,
            reason,
        };
        match serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))? {
            Tagged::Conclusion(c) => conclusions.push(c),
            Tagged::Summary { tau_out: t, .. } => tau_out = Some(t),
            _ => return Err(parse_err("expected a conclusion or summary record".into())),
        }
    }
    let tau_out = tau_out.ok_or_else(|| Error::Parse {
        path: source.to_owned(),
        line: 0,
        reason: "conclusions file has no summary record".into(),
    })?;
    Ok(Artifact::Conclusions(ConclusionSet { conclusions, tau_out }))
}
