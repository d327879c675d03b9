//! Reconstructed five-node example network and its codeword tables.
//!
//! Topology `{(1,2),(1,3),(2,4),(3,4),(4,5)}`; the weighted variant uses
//! `{10,10,10,1,10}` and the opinion variant a uniform weight α.

use std::f64::consts::LN_2;

use crate::coding::{Codeword, CodewordTable, DecodingFunction};
use crate::error::{CodingError, GraphError};
use crate::graph::{Edge, WeightedGraph};

pub const FIVE_NODE_N: usize = 5;
pub const FIVE_NODE_EDGES: [(usize, usize); 5] = [(1, 2), (1, 3), (2, 4), (3, 4), (4, 5)];
pub const FIVE_NODE_WEIGHTS: [f64; 5] = [10.0, 10.0, 10.0, 1.0, 10.0];

/// The attacked edge in both five-node examples.
pub const ATTACKED_EDGE: Edge = Edge { u: 3, v: 4 };

/// Uniform opinion weight solving `1 − 3α = 4α/3`.
pub const OPINION_ALPHA: f64 = 3.0 / 13.0;
pub const OPINION_GAMMA: f64 = 10.0;
pub const OPINION_UPSILON: f64 = 0.9538;
pub const OPINION_X0: [f64; 5] = [-3.2, -1.0, 3.3, 3.0, -4.3];

const UNWEIGHTED_R34: f64 = 0.75;
const WEIGHTED_R34: f64 = 3.0 / 13.0;

pub fn five_node_topology() -> WeightedGraph {
    WeightedGraph::uniform(FIVE_NODE_N, &FIVE_NODE_EDGES, 1.0).expect("bundled topology is valid")
}

pub fn five_node_weighted() -> WeightedGraph {
    WeightedGraph::build(FIVE_NODE_N, &FIVE_NODE_EDGES, &FIVE_NODE_WEIGHTS)
        .expect("bundled weights are valid")
}

pub fn five_node_uniform(alpha: f64) -> WeightedGraph {
    WeightedGraph::uniform(FIVE_NODE_N, &FIVE_NODE_EDGES, alpha).expect("alpha must be positive")
}

/// LogLinear(β) on the attacked edge with `θ = β − 1`, identity decoders
/// on the other edges.
pub fn five_node_table(beta: f64) -> Result<CodewordTable, CodingError> {
    let log = DecodingFunction::log_linear(beta)?;
    let g = five_node_weighted();
    CodewordTable::encode_graph(&g, |e| {
        if e == ATTACKED_EDGE {
            log.clone()
        } else {
            DecodingFunction::Linear { a: 0.0, b: 1.0 }
        }
    })
}

/// Every edge carries `θ = α ln 2` under the decoder `η / ln 2`.
pub fn opinion_table(alpha: f64) -> Result<CodewordTable, CodingError> {
    let dec = DecodingFunction::linear(1.0 / LN_2, 0.0)?;
    let g = five_node_uniform(alpha);
    Ok(CodewordTable::per_edge(
        g.edges()
            .iter()
            .map(|&e| (e, Codeword::new(alpha * LN_2, dec.clone()))),
    ))
}

/// Checks the reconstruction constraints; returns the first violation.
pub fn check_five_node_invariants() -> Result<(), String> {
    let topo = five_node_topology();
    let weighted = five_node_weighted();
    let r = |g: &WeightedGraph| -> Result<f64, GraphError> { g.effective_resistance(3, 4) };
    let ru = r(&topo).map_err(|e| e.to_string())?;
    if (ru - UNWEIGHTED_R34).abs() > 1e-12 {
        return Err(format!("unweighted R34 = {ru}, expected 3/4"));
    }
    let rw = r(&weighted).map_err(|e| e.to_string())?;
    if (rw - WEIGHTED_R34).abs() > 1e-12 {
        return Err(format!("weighted R34 = {rw}, expected 3/13"));
    }
    if !topo.is_bipartite() {
        return Err("five-node topology is not bipartite".into());
    }
    if topo.max_degree() != 3 || topo.degree(4) != 3 {
        return Err("node 4 must be the unique max-degree node with degree 3".into());
    }
    if (1..=5).filter(|&i| topo.degree(i) == 3).count() != 1 {
        return Err("max degree 3 is not unique to node 4".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_hold() {
        check_five_node_invariants().unwrap();
        let rw = five_node_weighted().effective_resistance(3, 4).unwrap();
        assert!((rw - 0.23077).abs() < 1e-5);
    }

    #[test]
    fn removing_edges_isolates_node_three() {
        let rest: Vec<Edge> = five_node_topology()
            .edges()
            .iter()
            .copied()
            .filter(|e| *e != Edge::new(1, 3) && *e != ATTACKED_EDGE)
            .collect();
        let comps = crate::graph::components_of(5, rest);
        assert_eq!(comps, vec![vec![1, 2, 4, 5], vec![3]]);
    }

    #[test]
    fn tables_decode_to_nominal() {
        for beta in [2.0, 3.0] {
            let t = five_node_table(beta).unwrap();
            t.check_consistent(&five_node_weighted(), 1e-12).unwrap();
            assert!((t.get(ATTACKED_EDGE).unwrap().theta - (beta - 1.0)).abs() < 1e-12);
        }
        let t = opinion_table(OPINION_ALPHA).unwrap();
        t.check_consistent(&five_node_uniform(OPINION_ALPHA), 1e-12)
            .unwrap();
        let g = five_node_uniform(OPINION_ALPHA);
        assert!((g.max_weighted_degree() - 3.0 * OPINION_ALPHA).abs() < 1e-15);
    }
}
