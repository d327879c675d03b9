//! Shared fixtures for the benchmarks.

use sbdc_core::graph::WeightedGraph;

/// Seeded connected graph with weights in `[0.5, 2]`.
pub fn random_graph(n: usize, seed: u64) -> WeightedGraph {
    WeightedGraph::random(n, 0.3, (0.5, 2.0), seed).expect("connected sample")
}
