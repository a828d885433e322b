use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;

use super::{LaplacianKind, ReasoningGraph};
use crate::error::{Error, Result};

/// Square compressed-sparse-row matrix, enough for Laplacian mat-vecs.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            n,
            indptr,
            indices,
            values,
        })
    }

    /// Laplacian of an undirected weighted edge list over `n` vertices.
    /// Parallel edges combine by maximum; self-loops are rejected.
    pub fn laplacian_from_edges(
        n: usize,
        edges: &[(usize, usize, f64)],
        kind: LaplacianKind,
    ) -> Result<Self> {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Shape(format!(
                    "edge ({i}, {j}) outside {n} vertices"
                )));
            }
            if i == j {
                return Err(Error::StructuralIntegrity(format!("self-loop on vertex {i}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::StructuralIntegrity(format!(
                    "edge ({i}, {j}) has non-positive weight {w}"
                )));
            }
            for (a, b) in [(i, j), (j, i)] {
                let slot = rows[a].entry(b).or_insert(w);
                *slot = slot.max(w);
            }
        }
        Ok(Self::laplacian_from_rows(&rows, kind))
    }

    fn laplacian_from_rows(rows: &[BTreeMap<usize, f64>], kind: LaplacianKind) -> Self {
        let n = rows.len();
        let degree: Vec<f64> = rows.iter().map(|r| r.values().sum()).collect();
        let inv_sqrt: Vec<f64> = degree
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (i, row) in rows.iter().enumerate() {
            let diag = match kind {
                LaplacianKind::Unnormalized => degree[i],
                LaplacianKind::Normalized if degree[i] > 0.0 => 1.0,
                LaplacianKind::Normalized => 0.0,
            };
            let mut diag_written = false;
            for (&j, &w) in row {
                if !diag_written && j > i {
                    if diag != 0.0 {
                        indices.push(i);
                        values.push(diag);
                    }
                    diag_written = true;
                }
                let v = match kind {
                    LaplacianKind::Unnormalized => -w,
                    LaplacianKind::Normalized => -inv_sqrt[i] * w * inv_sqrt[j],
                };
                indices.push(j);
                values.push(v);
            }
            if !diag_written && diag != 0.0 {
                indices.push(i);
                values.push(diag);
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
            *o = self.indices[lo..hi]
                .iter()
                .zip(&self.values[lo..hi])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[k])] = self.values[k];
            }
        }
        m
    }

    /// Largest absolute row sum; an upper bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.values[self.indptr[i]..self.indptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Sparse Laplacian straight from the graph, without the dense N×N
/// adjacency. Uses the same weighting rules and node order as
/// [`build_matrices`](super::build_matrices).
pub fn sparse_laplacian(
    graph: &ReasoningGraph,
    kind: LaplacianKind,
) -> Result<(CsrMatrix, Vec<String>)> {
    graph.validate()?;
    let order: Vec<String> = graph.node_ids().map(str::to_owned).collect();
    let index: HashMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); order.len()];
    let mut set = |a: &str, b: &str, w: f64| {
        let (i, j) = (index[a], index[b]);
        for (x, y) in [(i, j), (j, i)] {
            let slot = rows[x].entry(y).or_insert(w);
            *slot = slot.max(w);
        }
    };
    for e in graph.entailment_edges() {
        set(&e.premise, &e.hypothesis, 1.0);
    }
    for e in graph.structural_edges() {
        set(&e.a, &e.b, e.weight);
    }
    Ok((CsrMatrix::laplacian_from_rows(&rows, kind), order))
}
