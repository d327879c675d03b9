use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sbdc_bench::random_graph;
use sbdc_core::bundled;
use sbdc_core::coding::CodewordTable;
use sbdc_core::dpia::{self, DpiaParams};
use sbdc_core::margins;
use sbdc_core::sim::{simulate_ct_sbdc, AttackSpec, Deviation, SimConfig};

fn resistance(c: &mut Criterion) {
    let mut group = c.benchmark_group("effective_resistance");
    for n in [10, 30, 60] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter_batched(
                || random_graph(n, 7),
                |g| black_box(g.effective_resistance(1, n).unwrap()),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn edge_margins(c: &mut Criterion) {
    let g = random_graph(30, 3);
    let table = CodewordTable::identity(&g);
    let eps = 0.5 / g.spectral().lambda_max();
    c.bench_function("margins/all_edges_30", |b| {
        b.iter(|| {
            for e in g.edges() {
                black_box(margins::dt_margin(&g, &table, e.u, e.v, eps).unwrap());
            }
        })
    });
}

fn ct_simulation(c: &mut Criterion) {
    let g = bundled::five_node_weighted();
    let table = bundled::five_node_table(3.0).unwrap();
    let attack = AttackSpec::single_edge(bundled::ATTACKED_EDGE, Deviation::Constant(-4.7));
    let x0 = [1.0, -2.0, 0.5, 3.0, -1.5];
    let cfg = SimConfig {
        record_every: 1000,
        ..SimConfig::new(1e-3, 20.0)
    };
    c.bench_function("ct_sbdc/five_node_20s", |b| {
        b.iter(|| black_box(simulate_ct_sbdc(&g, &table, &attack, &x0, &cfg).unwrap()))
    });
}

fn dpia_steps(c: &mut Criterion) {
    let g = dpia::random_instance(102).unwrap();
    let params = DpiaParams::default();
    let cfg = SimConfig {
        record_every: 1000,
        ..SimConfig::new(1e-3, 1.0)
    };
    c.bench_function("dpia/1000_steps", |b| {
        b.iter(|| black_box(dpia::run_dpia(&g, &params, &AttackSpec::none(), &cfg, 1).unwrap()))
    });
}

criterion_group!(benches, resistance, edge_margins, ct_simulation, dpia_steps);
criterion_main!(benches);
