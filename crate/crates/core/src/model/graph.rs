use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlib::{sym_eigenvalues, Matrix, SymMatrix};

/// Undirected simple graph on nodes `1..=nodes`, stored as a sorted list of
/// `(i, j)` pairs with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            if i == 0 || j == 0 || i > nodes || j > nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) outside nodes 1..={nodes}"
                )));
            }
            normalized.push((i.min(j), i.max(j)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge {:?}", w[0])));
        }
        Ok(Graph { nodes, edges: normalized })
    }

    /// Node count inferred from the largest index mentioned by an edge.
    pub fn from_edges(edges: &[(usize, usize)]) -> Result<Self> {
        let nodes = edges.iter().map(|&(i, j)| i.max(j)).max().unwrap_or(0);
        Self::new(nodes, edges)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes];
        for &(i, j) in &self.edges {
            deg[i - 1] += 1;
            deg[j - 1] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.nodes];
        for &(i, j) in &self.edges {
            adj[i - 1].push(j - 1);
            adj[j - 1].push(i - 1);
        }
        let mut seen = vec![false; self.nodes];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn adjacency(&self) -> Matrix {
        let mut a = Matrix::zeros(self.nodes, self.nodes);
        for &(i, j) in &self.edges {
            a[(i - 1, j - 1)] = 1.0;
            a[(j - 1, i - 1)] = 1.0;
        }
        a
    }

    /// `L = D − Adj`.
    pub fn laplacian_matrix(&self) -> Matrix {
        let mut l = self.adjacency().scale(-1.0);
        for (i, d) in self.degrees().into_iter().enumerate() {
            l[(i, i)] = d as f64;
        }
        l
    }
}

/// Laplacian of a graph with the spectral quantities the classical DGD
/// step-size conditions are phrased in.
#[derive(Debug, Clone)]
pub struct LaplacianInfo {
    pub matrix: Matrix,
    pub d_max: f64,
    pub lambda_max: f64,
    /// Ascending Laplacian spectrum.
    pub eigenvalues: Vec<f64>,
}

impl LaplacianInfo {
    /// Second-largest eigenvalue magnitude of `I − ρL`.
    pub fn sigma(&self, rho: f64) -> f64 {
        let mut mags: Vec<f64> = self.eigenvalues.iter().map(|l| (1.0 - rho * l).abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        mags.get(1).copied().unwrap_or(0.0)
    }
}

pub fn laplacian(graph: &Graph) -> Result<LaplacianInfo> {
    let matrix = graph.laplacian_matrix();
    let eigenvalues = sym_eigenvalues(&SymMatrix::new(matrix.clone())?)?;
    let d_max = graph.degrees().into_iter().max().unwrap_or(0) as f64;
    let lambda_max = eigenvalues.last().copied().unwrap_or(0.0);
    Ok(LaplacianInfo { matrix, d_max, lambda_max, eigenvalues })
}
