use crate::graph::{Edge, WeightedGraph};

/// Localized pairwise differences `h_ij(x) = x_i − x_j` over the edge set,
/// for states stacked node-major with `dim` components per node.
#[derive(Debug, Clone)]
pub struct StepKernel {
    n: usize,
    dim: usize,
    /// 0-based endpoints in canonical edge order.
    pairs: Vec<(usize, usize)>,
}

impl StepKernel {
    pub fn new(graph: &WeightedGraph, dim: usize) -> Self {
        StepKernel {
            n: graph.node_count(),
            dim,
            pairs: graph.edges().iter().map(|e| (e.u - 1, e.v - 1)).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edge_count(&self) -> usize {
        self.pairs.len()
    }

    /// `h_ij(x)` in component `d`. Zero when `(i, j)` is not an edge.
    pub fn difference(&self, x: &[f64], i: usize, j: usize, d: usize) -> f64 {
        let e = Edge::new(i, j);
        if self.pairs.contains(&(e.u - 1, e.v - 1)) {
            x[(i - 1) * self.dim + d] - x[(j - 1) * self.dim + d]
        } else {
            0.0
        }
    }

    /// `out += scale · Σ_e w_e (x_u − x_v)` at `u`, minus at `v`, which is
    /// `scale · (L_w ⊗ I_D) x`.
    pub fn accumulate(&self, weights: &[f64], x: &[f64], scale: f64, out: &mut [f64]) {
        let d = self.dim;
        for (&(u, v), &w) in self.pairs.iter().zip(weights) {
            let sw = scale * w;
            for c in 0..d {
                let h = x[u * d + c] - x[v * d + c];
                out[u * d + c] += sw * h;
                out[v * d + c] -= sw * h;
            }
        }
    }
}

/// `‖x − mean·1‖` with the mean taken per component.
pub fn disagreement(x: &[f64], n: usize, dim: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..dim {
        let mean = (0..n).map(|i| x[i * dim + c]).sum::<f64>() / n as f64;
        total += (0..n).map(|i| (x[i * dim + c] - mean).powi(2)).sum::<f64>();
    }
    total.sqrt()
}
