//! Weighted undirected graphs and their Laplacian spectra.
//!
//! Nodes are 1-based at the public API. Edges are stored canonically with
//! `u < v`, matching the incidence convention `-1` at `u`, `+1` at `v`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Relative eigenvalue cutoff used when forming the pseudoinverse.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

const RANDOM_GRAPH_RETRIES: usize = 1000;

/// Unordered node pair, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Edge { u: a, v: b }
        } else {
            Edge { u: b, v: a }
        }
    }

    pub fn other(&self, node: usize) -> Option<usize> {
        if node == self.u {
            Some(self.v)
        } else if node == self.v {
            Some(self.u)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

impl From<(usize, usize)> for Edge {
    fn from((a, b): (usize, usize)) -> Self {
        Edge::new(a, b)
    }
}

/// Laplacian, its pseudoinverse and ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub laplacian: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl SpectralSummary {
    pub fn lambda_2(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("n >= 2")
    }
}

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    weights: Vec<f64>,
    index: HashMap<Edge, usize>,
    /// Per node (0-based): `(neighbor (1-based), edge index)`.
    adjacency: Vec<Vec<(usize, usize)>>,
    spectral: OnceLock<SpectralSummary>,
}

impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges && self.weights == other.weights
    }
}

impl WeightedGraph {
    /// Validates and builds a graph. Edges are sorted canonically; the
    /// weight list follows the input edge order.
    pub fn build<E: Into<Edge> + Copy>(
        n: usize,
        edges: &[E],
        weights: &[f64],
    ) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        if edges.len() != weights.len() {
            return Err(GraphError::LengthMismatch {
                edges: edges.len(),
                weights: weights.len(),
            });
        }
        let mut pairs: Vec<(Edge, f64)> = Vec::with_capacity(edges.len());
        for (&e, &w) in edges.iter().zip(weights) {
            let e: Edge = e.into();
            for node in [e.u, e.v] {
                if node == 0 || node > n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::NonPositiveWeight { edge: e, weight: w });
            }
            pairs.push((e, w));
        }
        pairs.sort_by_key(|p| p.0);
        for win in pairs.windows(2) {
            if win[0].0 == win[1].0 {
                return Err(GraphError::DuplicateEdge(win[0].0));
            }
        }
        let (edges, weights): (Vec<Edge>, Vec<f64>) = pairs.into_iter().unzip();
        let mut adjacency = vec![Vec::new(); n];
        let mut index = HashMap::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.u - 1].push((e.v, k));
            adjacency[e.v - 1].push((e.u, k));
            index.insert(*e, k);
        }
        let components = count_components(n, &adjacency);
        if components != 1 {
            return Err(GraphError::Disconnected { components });
        }
        Ok(WeightedGraph {
            n,
            edges,
            weights,
            index,
            adjacency,
            spectral: OnceLock::new(),
        })
    }

    /// Every edge gets the same weight.
    pub fn uniform<E: Into<Edge> + Copy>(
        n: usize,
        edges: &[E],
        weight: f64,
    ) -> Result<Self, GraphError> {
        WeightedGraph::build(n, edges, &vec![weight; edges.len()])
    }

    /// Same topology, new weights (in canonical edge order).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, GraphError> {
        WeightedGraph::build(self.n, &self.edges, weights)
    }

    pub fn with_uniform_weight(&self, weight: f64) -> Result<Self, GraphError> {
        WeightedGraph::uniform(self.n, &self.edges, weight)
    }

    pub fn scaled(&self, c: f64) -> Result<Self, GraphError> {
        let w: Vec<f64> = self.weights.iter().map(|w| w * c).collect();
        self.with_weights(&w)
    }

    /// Erdős–Rényi sample with uniform weights in `weight_range`, resampled
    /// until connected.
    pub fn random(
        n: usize,
        edge_probability: f64,
        weight_range: (f64, f64),
        seed: u64,
    ) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&edge_probability) {
            return Err(GraphError::InvalidParameter(format!(
                "edge probability {edge_probability}"
            )));
        }
        let (lo, hi) = weight_range;
        if !(lo > 0.0) || hi < lo {
            return Err(GraphError::InvalidParameter(format!(
                "weight range [{lo}, {hi}]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..RANDOM_GRAPH_RETRIES {
            let mut edges = Vec::new();
            let mut weights = Vec::new();
            for i in 1..=n {
                for j in (i + 1)..=n {
                    if rng.random_bool(edge_probability) {
                        edges.push(Edge::new(i, j));
                        weights.push(if hi > lo {
                            rng.random_range(lo..=hi)
                        } else {
                            lo
                        });
                    }
                }
            }
            match WeightedGraph::build(n, &edges, &weights) {
                Ok(g) => return Ok(g),
                Err(GraphError::Disconnected { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(GraphError::RetryBudgetExhausted(RANDOM_GRAPH_RETRIES))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.index.get(&Edge::new(a, b)).copied()
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        self.edge_index(a, b).is_some()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.edge_index(a, b).map(|k| self.weights[k])
    }

    /// `(neighbor, edge index)` pairs of a 1-based node.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node - 1]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node - 1].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `w_i = Σ_{j∈N_i} w_ij`, indexed by 0-based node.
    pub fn weighted_degrees(&self) -> Vec<f64> {
        self.adjacency
            .iter()
            .map(|nb| nb.iter().map(|&(_, k)| self.weights[k]).sum())
            .collect()
    }

    /// Ψ_G, the largest weighted degree.
    pub fn max_weighted_degree(&self) -> f64 {
        self.weighted_degrees().into_iter().fold(0.0, f64::max)
    }

    pub fn is_uniform(&self) -> bool {
        let w0 = self.weights[0];
        self.weights
            .iter()
            .all(|w| (w - w0).abs() <= 1e-12 * w0.abs().max(1.0))
    }

    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![None; self.n];
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(false);
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                let ci = color[i].unwrap();
                for &(j, _) in &self.adjacency[i] {
                    match color[j - 1] {
                        None => {
                            color[j - 1] = Some(!ci);
                            queue.push_back(j - 1);
                        }
                        Some(cj) if cj == ci => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }

    /// n×m incidence matrix: column k has -1 at `u` and +1 at `v`.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(self.n, self.edges.len());
        for (k, edge) in self.edges.iter().enumerate() {
            e[(edge.u - 1, k)] = -1.0;
            e[(edge.v - 1, k)] = 1.0;
        }
        e
    }

    /// `L = E W Eᵀ`, assembled directly.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for (e, &w) in self.edges.iter().zip(&self.weights) {
            let (i, j) = (e.u - 1, e.v - 1);
            l[(i, i)] += w;
            l[(j, j)] += w;
            l[(i, j)] -= w;
            l[(j, i)] -= w;
        }
        l
    }

    /// Cached spectral decomposition.
    pub fn spectral(&self) -> &SpectralSummary {
        self.spectral.get_or_init(|| {
            let laplacian = self.laplacian_matrix();
            let eig = SymmetricEigen::new(laplacian.clone());
            let mut order: Vec<usize> = (0..self.n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
            let lambda_max = eigenvalues.last().copied().unwrap_or(0.0).abs();
            let cutoff = PINV_RELATIVE_CUTOFF * lambda_max;
            let mut pinv = DMatrix::zeros(self.n, self.n);
            for k in 0..self.n {
                let lam = eig.eigenvalues[k];
                if lam.abs() > cutoff {
                    let v = eig.eigenvectors.column(k);
                    pinv += (v * v.transpose()) / lam;
                }
            }
            SpectralSummary {
                laplacian,
                pinv,
                eigenvalues,
            }
        })
    }

    /// `R_uv = L†_uu − 2 L†_uv + L†_vv`.
    pub fn effective_resistance(&self, u: usize, v: usize) -> Result<f64, GraphError> {
        for node in [u, v] {
            if node == 0 || node > self.n {
                return Err(GraphError::NodeOutOfRange { node, n: self.n });
            }
        }
        if u == v {
            return Err(GraphError::SameNode(u));
        }
        let p = &self.spectral().pinv;
        let (i, j) = (u - 1, v - 1);
        Ok(p[(i, i)] - 2.0 * p[(i, j)] + p[(j, j)])
    }

    /// Edge resistance, rejecting non-edges.
    pub fn edge_resistance(&self, u: usize, v: usize) -> Result<f64, GraphError> {
        if !self.contains_edge(u, v) {
            return Err(GraphError::NotAnEdge {
                pair: Edge::new(u, v),
            });
        }
        self.effective_resistance(u, v)
    }

    /// `e_u − e_v` style column of the incidence matrix for an edge.
    pub fn edge_vector(&self, edge: Edge) -> DVector<f64> {
        let mut b = DVector::zeros(self.n);
        b[edge.u - 1] = -1.0;
        b[edge.v - 1] = 1.0;
        b
    }
}

fn count_components(n: usize, adjacency: &[Vec<(usize, usize)>]) -> usize {
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for &(j, _) in &adjacency[i] {
                if !seen[j - 1] {
                    seen[j - 1] = true;
                    stack.push(j - 1);
                }
            }
        }
    }
    components
}

/// Connected components of `1..=n` under an arbitrary edge subset. Each
/// component is sorted; components are ordered by smallest member.
pub fn components_of(n: usize, edges: impl IntoIterator<Item = Edge>) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for e in edges {
        let a = find(&mut parent, e.u - 1);
        let b = find(&mut parent, e.v - 1);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let k = *slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[k].push(i + 1);
    }
    groups
}
