//! Undirected weighted graphs with node features.

use std::collections::HashSet;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_permutation, permute_rows, DenseSymMatrix};

/// One undirected edge, stored once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeFeatures {
    /// Categorical label id per node.
    Labels(Vec<usize>),
    /// Real feature matrix, one row per node.
    Dense(Array2<f64>),
}

impl NodeFeatures {
    pub fn len(&self) -> usize {
        match self {
            NodeFeatures::Labels(l) => l.len(),
            NodeFeatures::Dense(x) => x.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Features as real columns; categorical labels become one column of ids.
    pub fn as_signals(&self) -> Array2<f64> {
        match self {
            NodeFeatures::Labels(l) => {
                Array2::from_shape_fn((l.len(), 1), |(u, _)| l[u] as f64)
            }
            NodeFeatures::Dense(x) => x.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    features: NodeFeatures,
    name: String,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<Edge>, features: NodeFeatures) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        if features.len() != n {
            return Err(Error::DimensionMismatch {
                context: "node features rows",
                expected: n,
                actual: features.len(),
            });
        }
        let mut seen = HashSet::new();
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) out of range for n = {n}",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("self-loop at node {}", e.u)));
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has invalid weight {}",
                    e.u, e.v, e.weight
                )));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.u, e.v
                )));
            }
        }
        if let NodeFeatures::Dense(x) = &features {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("node features".into()));
            }
        }
        Ok(Self {
            n,
            edges,
            features,
            name: String::new(),
        })
    }

    /// Unit-weight graph with every node labelled 0.
    pub fn unweighted(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let edges = pairs
            .iter()
            .map(|&(u, v)| Edge { u, v, weight: 1.0 })
            .collect();
        Self::new(n, edges, NodeFeatures::Labels(vec![0; n]))
    }

    pub fn path(n: usize) -> Self {
        let pairs: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::unweighted(n, &pairs).expect("path graph is valid")
    }

    /// Cycle on `n >= 3` nodes.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 nodes");
        let mut pairs: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        pairs.push((n - 1, 0));
        Self::unweighted(n, &pairs).expect("cycle graph is valid")
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_features(self, features: NodeFeatures) -> Result<Self> {
        let name = self.name;
        Ok(Self::new(self.n, self.edges, features)?.with_name(name))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn features(&self) -> &NodeFeatures {
        &self.features
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Unweighted degree of every node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Relabels nodes so that old node `u` becomes `perm[u]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n || !is_permutation(perm) {
            return Err(Error::InvalidGraph(format!(
                "not a permutation of 0..{}",
                self.n
            )));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                u: perm[e.u],
                v: perm[e.v],
                weight: e.weight,
            })
            .collect();
        let features = match &self.features {
            NodeFeatures::Labels(l) => {
                let mut out = vec![0; self.n];
                for (u, &pu) in perm.iter().enumerate() {
                    out[pu] = l[u];
                }
                NodeFeatures::Labels(out)
            }
            NodeFeatures::Dense(x) => NodeFeatures::Dense(permute_rows(x, perm)),
        };
        Ok(Self {
            n: self.n,
            edges,
            features,
            name: self.name.clone(),
        })
    }

    /// Edges as `(min, max, weight)` triples, sorted; isomorphism-free identity
    /// check used by round-trip tests.
    pub fn canonical_edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<_> = self
            .edges
            .iter()
            .map(|e| (e.u.min(e.v), e.u.max(e.v), e.weight))
            .collect();
        out.sort_by_key(|a| (a.0, a.1));
        out
    }
}

/// Weighted adjacency matrix `A` (zero diagonal).
pub fn adjacency(g: &Graph) -> DenseSymMatrix {
    let mut a = Array2::zeros((g.n, g.n));
    for e in &g.edges {
        a[[e.u, e.v]] = e.weight;
        a[[e.v, e.u]] = e.weight;
    }
    DenseSymMatrix::new(a).expect("adjacency is symmetric by construction")
}

/// Row sums of `a`; with `add_self_loops` each entry gains 1, giving the
/// diagonal of `D + I`.
pub fn degree_matrix(a: &DenseSymMatrix, add_self_loops: bool) -> Array1<f64> {
    let shift = if add_self_loops { 1.0 } else { 0.0 };
    a.values().rows().into_iter().map(|r| r.sum() + shift).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn adjacency_examples() {
        let single = Graph::unweighted(1, &[]).unwrap();
        assert_eq!(adjacency(&single).values(), &array![[0.0]]);

        let p2 = Graph::path(2);
        assert_eq!(adjacency(&p2).values(), &array![[0.0, 1.0], [1.0, 0.0]]);

        let p3 = Graph::path(3);
        assert_eq!(
            adjacency(&p3).values(),
            &array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]
        );
    }

    #[test]
    fn degree_examples() {
        let a = adjacency(&Graph::path(2));
        assert_eq!(degree_matrix(&a, false), array![1.0, 1.0]);
        assert_eq!(degree_matrix(&a, true), array![2.0, 2.0]);
        let iso = adjacency(&Graph::unweighted(1, &[]).unwrap());
        assert_eq!(degree_matrix(&iso, true), array![1.0]);
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert!(Graph::unweighted(0, &[]).is_err());
        assert!(Graph::unweighted(2, &[(0, 2)]).is_err());
        assert!(Graph::unweighted(2, &[(1, 1)]).is_err());
        assert!(Graph::unweighted(2, &[(0, 1), (1, 0)]).is_err());
        let neg = vec![Edge { u: 0, v: 1, weight: -1.0 }];
        assert!(Graph::new(2, neg, NodeFeatures::Labels(vec![0, 0])).is_err());
        assert!(Graph::new(2, vec![], NodeFeatures::Labels(vec![0])).is_err());
    }

    #[test]
    fn permute_rejects_non_permutation() {
        let g = Graph::path(3);
        assert!(g.permute(&[0, 0, 1]).is_err());
        assert!(g.permute(&[0, 1]).is_err());
    }
}
