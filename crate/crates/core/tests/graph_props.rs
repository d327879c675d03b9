use nalgebra::DMatrix;
use proptest::prelude::*;

use sbdc_core::graph::{Edge, WeightedGraph};

/// Connected graph strategy: a random spanning tree plus extra edges.
fn connected_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (2..=n).map(|v| (1..v).boxed()).collect();
            let extra = proptest::collection::vec((1..=n, 1..=n), 0..n * 2);
            (Just(n), parents, extra)
        })
        .prop_flat_map(|(n, parents, extra)| {
            let mut edges: Vec<Edge> = parents
                .iter()
                .enumerate()
                .map(|(i, &p)| Edge::new(p, i + 2))
                .collect();
            for (a, b) in extra {
                let e = Edge::new(a, b);
                if a != b && !edges.contains(&e) {
                    edges.push(e);
                }
            }
            let m = edges.len();
            (
                Just(n),
                Just(edges),
                proptest::collection::vec(0.1f64..10.0, m),
            )
        })
        .prop_map(|(n, edges, w)| WeightedGraph::build(n, &edges, &w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_invariants(g in connected_graph(9)) {
        let s = g.spectral();
        let n = g.node_count();
        let l = &s.laplacian;
        for i in 0..n {
            let row: f64 = (0..n).map(|j| l[(i, j)]).sum();
            prop_assert!(row.abs() < 1e-10);
            for j in 0..n {
                prop_assert_eq!(l[(i, j)], l[(j, i)]);
            }
        }
        let scale = s.lambda_max();
        prop_assert!(s.eigenvalues.iter().all(|&e| e > -1e-10 * scale));
        let zeros = s.eigenvalues.iter().filter(|e| e.abs() < 1e-9 * scale).count();
        prop_assert_eq!(zeros, 1);
        prop_assert!(s.lambda_2() > 0.0);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn laplacian_matches_entrywise_assembly(g in connected_graph(9)) {
        let n = g.node_count();
        let mut l = DMatrix::zeros(n, n);
        for (e, &w) in g.edges().iter().zip(g.weights()) {
            let (i, j) = (e.u - 1, e.v - 1);
            l[(i, i)] += w;
            l[(j, j)] += w;
            l[(i, j)] -= w;
            l[(j, i)] -= w;
        }
        prop_assert!((l - g.laplacian_matrix()).amax() < 1e-12);
    }

    #[test]
    fn pseudoinverse_properties(g in connected_graph(9)) {
        let s = g.spectral();
        let l = &s.laplacian;
        let p = &s.pinv;
        prop_assert!((l * p * l - l).amax() < 1e-8 * s.lambda_max());
        prop_assert!((p * l * p - p).amax() < 1e-8 / s.lambda_2());
    }

    #[test]
    fn resistance_is_a_metric(g in connected_graph(8)) {
        let n = g.node_count();
        let r = |a: usize, b: usize| g.effective_resistance(a, b).unwrap();
        for a in 1..=n {
            for b in 1..=n {
                if a == b { continue; }
                prop_assert!(r(a, b) > 0.0);
                prop_assert!((r(a, b) - r(b, a)).abs() < 1e-12);
                for c in 1..=n {
                    if c == a || c == b { continue; }
                    prop_assert!(r(a, b) <= r(a, c) + r(c, b) + 1e-10);
                }
            }
        }
    }

    #[test]
    fn resistance_below_edge_inverse_weight(g in connected_graph(9)) {
        for (e, &w) in g.edges().iter().zip(g.weights()) {
            prop_assert!(g.edge_resistance(e.u, e.v).unwrap() <= 1.0 / w + 1e-12);
        }
    }

    #[test]
    fn rayleigh_monotonicity(g in connected_graph(8), k in any::<prop::sample::Index>(), bump in 0.01f64..5.0) {
        let idx = k.index(g.edge_count());
        let mut w = g.weights().to_vec();
        w[idx] += bump;
        let h = g.with_weights(&w).unwrap();
        let n = g.node_count();
        for a in 1..=n {
            for b in (a + 1)..=n {
                let before = g.effective_resistance(a, b).unwrap();
                let after = h.effective_resistance(a, b).unwrap();
                prop_assert!(after <= before + 1e-12);
            }
        }
    }

    #[test]
    fn uniform_scaling(g in connected_graph(8), c in 0.1f64..10.0) {
        let h = g.scaled(c).unwrap();
        let n = g.node_count();
        for a in 1..=n {
            for b in (a + 1)..=n {
                let r = g.effective_resistance(a, b).unwrap();
                let rc = h.effective_resistance(a, b).unwrap();
                prop_assert!((rc - r / c).abs() < 1e-9 * r / c);
            }
        }
        prop_assert!((h.max_weighted_degree() - c * g.max_weighted_degree()).abs() < 1e-12 * c * g.max_weighted_degree());
    }

    #[test]
    fn random_graph_is_deterministic(n in 3usize..10, p in 0.3f64..1.0, seed in any::<u64>()) {
        let a = WeightedGraph::random(n, p, (0.5, 2.0), seed);
        let b = WeightedGraph::random(n, p, (0.5, 2.0), seed);
        prop_assert_eq!(a.clone(), b);
        if let Ok(g) = a {
            prop_assert!(g.weights().iter().all(|&w| (0.5..=2.0).contains(&w)));
        }
    }
}

fn cycle(n: usize, w: f64) -> WeightedGraph {
    let edges: Vec<(usize, usize)> = (1..=n).map(|i| (i, i % n + 1)).collect();
    WeightedGraph::uniform(n, &edges, w).unwrap()
}

fn complete_bipartite(a: usize, w: f64) -> WeightedGraph {
    let mut edges = Vec::new();
    for i in 1..=a {
        for j in (a + 1)..=(2 * a) {
            edges.push((i, j));
        }
    }
    WeightedGraph::uniform(2 * a, &edges, w).unwrap()
}

fn hypercube(d: u32, w: f64) -> WeightedGraph {
    let n = 1usize << d;
    let mut edges = Vec::new();
    for i in 0..n {
        for b in 0..d {
            let j = i ^ (1 << b);
            if i < j {
                edges.push((i + 1, j + 1));
            }
        }
    }
    WeightedGraph::uniform(n, &edges, w).unwrap()
}

#[test]
fn regular_bipartite_degree_is_half_lambda_max() {
    let mut graphs = Vec::new();
    for k in 2..=6 {
        graphs.push(cycle(2 * k, 0.7));
    }
    for a in 1..=5 {
        graphs.push(complete_bipartite(a, 1.3));
    }
    for d in 1..=4 {
        graphs.push(hypercube(d, 2.0));
    }
    for g in graphs {
        assert!(g.is_bipartite());
        let half = g.spectral().lambda_max() / 2.0;
        assert!(
            (g.max_weighted_degree() - half).abs() < 1e-8,
            "{:?}",
            g.edges()
        );
    }
    assert!(!cycle(5, 1.0).is_bipartite());
}
