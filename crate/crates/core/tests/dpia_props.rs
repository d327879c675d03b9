use sbdc_core::bundled;
use sbdc_core::dpia::{self, DpiaParams, DpiaResult};
use sbdc_core::graph::WeightedGraph;
use sbdc_core::margins;
use sbdc_core::sim::{AttackSpec, AttackTarget, Classification, Deviation, Gain, SimConfig};

fn config(horizon: f64) -> SimConfig {
    SimConfig {
        record_every: 1000,
        ..SimConfig::new(1e-3, horizon)
    }
}

/// A dense random instance with λ₂ ≈ 4.
fn well_connected() -> WeightedGraph {
    dpia::random_instance(102).unwrap()
}

fn rate(r: &DpiaResult) -> f64 {
    r.rate.map(|m| m.r).unwrap_or(f64::NAN)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut j = k;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[k]] {
            j += 1;
        }
        for &i in &idx[k..=j] {
            out[i] = (k + j) as f64 / 2.0;
        }
        k = j + 1;
    }
    out
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let m = (a.len() as f64 - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - m) * (y - m)).sum();
    let va: f64 = ra.iter().map(|x| (x - m).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - m).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn spearman_oracle_sanity() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
    assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
}

#[test]
fn nominal_five_node_estimate() {
    // λ₂ ≈ 0.83 here, so the estimate settles far slower than on the random
    // instances.
    let g = bundled::five_node_topology();
    let run = dpia::run_dpia(
        &g,
        &DpiaParams::default(),
        &AttackSpec::none(),
        &config(300.0),
        2,
    )
    .unwrap();
    let final_error = *run.error.last().unwrap();
    assert!(final_error < 0.05 * run.lambda2_true, "Λ = {final_error}");
    let late = dpia::convergence_rate(&run.error_times, &run.error, 100.0, 300.0).unwrap();
    assert!(late.r > 0.0);
}

#[test]
fn single_edge_gain_attack_within_margin_keeps_rate() {
    let g = well_connected();
    let params = DpiaParams::default();
    let e = g.edges()[0];
    let scaled = g.scaled(params.estimator.kp).unwrap();
    let rho = margins::second_order_kp_margin(&scaled, &params.decoders[1], e.u, e.v)
        .unwrap()
        .codeword_margin;
    let nominal = dpia::run_dpia(&g, &params, &AttackSpec::none(), &config(100.0), 2).unwrap();
    let attack = AttackSpec::none()
        .with(
            AttackTarget::ParamEdge(Gain::Kp, e),
            Deviation::Constant(-0.5 * rho),
        )
        .unwrap();
    let attacked = dpia::run_dpia(&g, &params, &attack, &config(100.0), 2).unwrap();
    let (r0, r1) = (rate(&nominal), rate(&attacked));
    assert!((r1 - r0).abs() <= 0.1 * r0, "r nominal {r0}, attacked {r1}");
    assert!(attacked.relative_error() < 0.1);
}

#[test]
fn gain_perturbation_inside_bound_keeps_classification() {
    let g = well_connected();
    let params = DpiaParams::default();
    let lmax = g.spectral().lambda_max();
    let m = margins::second_order_all_margins(params.estimator, 5.0, 2.0, 0.1, lmax).unwrap();
    let nominal = dpia::run_dpia(&g, &params, &AttackSpec::none(), &config(100.0), 3).unwrap();
    assert_eq!(nominal.classification, Classification::Converged);
    let attack = AttackSpec::broadcast(Gain::Kp, Deviation::Constant(-0.5 * m.bound_kp(0.0)));
    let attacked = dpia::run_dpia(&g, &params, &attack, &config(100.0), 3).unwrap();
    assert_eq!(nominal.classification, attacked.classification);
}

#[test]
fn random_instances_estimate_and_rank_connectivity() {
    let params = DpiaParams::default();
    let mut lambdas = Vec::new();
    let mut rates = Vec::new();
    let mut rel = Vec::new();
    for seed in 100..120u64 {
        let g: WeightedGraph = dpia::random_instance(seed).unwrap();
        // r is taken on the default [10, 100] window; the longer horizon only
        // lets the slow, sparse instances settle before the spread check.
        let run = dpia::run_dpia(&g, &params, &AttackSpec::none(), &config(300.0), seed).unwrap();
        assert!(
            run.spread() < 0.1 * run.lambda2_true,
            "seed {seed} spread {}",
            run.spread()
        );
        lambdas.push(run.lambda2_true);
        rates.push(rate(&run));
        rel.push(run.relative_error());
    }
    rel.sort_by(f64::total_cmp);
    assert!(
        rel[rel.len() / 2] < 0.1,
        "median relative error {}",
        rel[rel.len() / 2]
    );
    let rho = spearman(&lambdas, &rates);
    assert!(rho > 0.3, "Spearman {rho}");
}
