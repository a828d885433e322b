use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ReasoningGraph;
use crate::error::{Error, Result};

/// Dense adjacency and degree of a reasoning graph.
///
/// Row `i` corresponds to `node_order[i]`; ids are sorted so the matrices do
/// not depend on how the graph was assembled.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMatrices {
    pub adjacency: DMatrix<f64>,
    /// Diagonal of D.
    pub degree: DVector<f64>,
    pub node_order: Vec<String>,
}

impl GraphMatrices {
    pub fn len(&self) -> usize {
        self.node_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_order.is_empty()
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.degree)
    }

    pub fn laplacian(&self, kind: LaplacianKind) -> DMatrix<f64> {
        match kind {
            LaplacianKind::Unnormalized => laplacian(self),
            LaplacianKind::Normalized => normalized_laplacian(self),
        }
    }
}

/// Each entailment edge contributes weight 1 to its unordered pair; a
/// structural edge on the same pair combines by maximum.
pub fn build_matrices(graph: &ReasoningGraph) -> Result<GraphMatrices> {
    graph.validate()?;
    let node_order: Vec<String> = graph.node_ids().map(str::to_owned).collect();
    let index: HashMap<&str, usize> = node_order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let n = node_order.len();
    let mut adjacency = DMatrix::<f64>::zeros(n, n);

    let mut set = |a: &str, b: &str, w: f64| {
        let (i, j) = (index[a], index[b]);
        let v = adjacency[(i, j)].max(w);
        adjacency[(i, j)] = v;
        adjacency[(j, i)] = v;
    };
    for e in graph.entailment_edges() {
        set(&e.premise, &e.hypothesis, 1.0);
    }
    for e in graph.structural_edges() {
        set(&e.a, &e.b, e.weight);
    }

    let degree = DVector::from_iterator(n, adjacency.row_iter().map(|r| r.sum()));
    Ok(GraphMatrices {
        adjacency,
        degree,
        node_order,
    })
}

/// L = D − A.
pub fn laplacian(m: &GraphMatrices) -> DMatrix<f64> {
    let mut l = -&m.adjacency;
    for (i, d) in m.degree.iter().enumerate() {
        l[(i, i)] += d;
    }
    l
}

/// I − D^{-1/2} A D^{-1/2}, with D^{-1/2} taken as 0 on isolated nodes so
/// their rows and columns are identically zero.
pub fn normalized_laplacian(m: &GraphMatrices) -> DMatrix<f64> {
    let n = m.len();
    let inv_sqrt: Vec<f64> = m
        .degree
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let off = inv_sqrt[i] * m.adjacency[(i, j)] * inv_sqrt[j];
        if i == j {
            if m.degree[i] > 0.0 {
                1.0 - off
            } else {
                0.0
            }
        } else {
            -off
        }
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LaplacianKind {
    #[default]
    Unnormalized,
    Normalized,
}

impl LaplacianKind {
    pub const NAMES: [&'static str; 2] = ["unnorm", "norm"];

    pub fn name(&self) -> &'static str {
        match self {
            LaplacianKind::Unnormalized => "unnorm",
            LaplacianKind::Normalized => "norm",
        }
    }
}

impl fmt::Display for LaplacianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TryFrom<String> for LaplacianKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LaplacianKind> for String {
    fn from(k: LaplacianKind) -> String {
        k.name().to_owned()
    }
}

impl FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unnorm" | "unnormalized" => Ok(LaplacianKind::Unnormalized),
            "norm" | "normalized" => Ok(LaplacianKind::Normalized),
            other => Err(Error::Config(format!(
                "unknown laplacian variant {other:?} (expected one of {:?})",
                Self::NAMES
            ))),
        }
    }
}
