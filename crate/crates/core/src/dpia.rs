//! Decentralized estimation of the Fiedler eigenvalue λ₂ by two coupled PI
//! estimators and the ζ-dynamics
//!
//! ```text
//! ζ̇_i = −k1 y_{i,1} − k2 Σ_j (ζ_i − ζ_j) − k3 (y_{i,2} − 1) ζ_i
//! ```
//!
//! with estimator inputs `c_{i,1} = ζ_i` and `c_{i,2} = ζ_i²`. Each node
//! reads `λ_{2,i} = (k3/k2)(1 − y_{i,2})`.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coding::{DecodingFunction, TableMode};
use crate::error::{MetricsError, SimError};
use crate::graph::WeightedGraph;
use crate::margins::PiAceParams;
use crate::sim::{
    classify_disagreement, disagreement, AttackSpec, Classification, PiAceCoding, PiAceSystem, Rk4,
    RunStatus, SimConfig, StepKernel, Trajectory, DEFAULT_GROWTH_FACTOR,
};

/// Λ values at or below zero are replaced by this before taking logs.
pub const LOG_FLOOR: f64 = 1e-300;

const WINDOW_SLACK: f64 = 1e-9;

/// Final spread of the node estimates, relative to λ₂, below which the
/// estimator subsystem counts as converged.
pub const AGREEMENT_REL_TOL: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct DpiaParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub estimator: PiAceParams,
    /// Decoders for α, K_P and K_I.
    pub decoders: [DecodingFunction; 3],
    pub mode: TableMode,
    /// Metric window `[t0, t1]`.
    pub t0: f64,
    pub t1: f64,
}

impl Default for DpiaParams {
    fn default() -> Self {
        DpiaParams {
            k1: 60.0,
            k2: 1.0,
            k3: 200.0,
            estimator: PiAceParams::default(),
            decoders: [
                DecodingFunction::Linear { a: 0.0, b: 5.0 },
                DecodingFunction::Linear { a: 0.0, b: 2.0 },
                DecodingFunction::Linear { a: 0.0, b: 0.1 },
            ],
            mode: TableMode::Broadcast,
            t0: 10.0,
            t1: 100.0,
        }
    }
}

impl DpiaParams {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [("k1", self.k1), ("k2", self.k2), ("k3", self.k3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.t0 <= self.t1) {
            return Err(SimError::InvalidConfig(format!(
                "metric window [{}, {}] is empty",
                self.t0, self.t1
            )));
        }
        self.estimator
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))
    }

    pub fn coding(&self, graph: &WeightedGraph) -> Result<PiAceCoding, SimError> {
        match self.mode {
            TableMode::Broadcast => {
                PiAceCoding::broadcast(graph, self.estimator, self.decoders.clone())
            }
            TableMode::PerEdge => {
                PiAceCoding::per_edge(graph, self.estimator, self.decoders.clone())
            }
        }
    }

    /// `λ_{2,i} = (k3/k2)(1 − y_{i,2})`.
    pub fn estimate(&self, y2: f64) -> f64 {
        self.k3 / self.k2 * (1.0 - y2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateMetrics {
    /// `r = −mean_l log(Λ(t_l)) / t_l` over the window. `r ≤ 0` means no
    /// decay.
    pub r: f64,
    pub samples: usize,
    /// True if some `Λ(t_l)` was at or below zero and got floored.
    pub clamped: bool,
}

/// Convergence rate over samples with `t0 ≤ t ≤ t1` and `t > 0`.
pub fn convergence_rate(
    times: &[f64],
    errors: &[f64],
    t0: f64,
    t1: f64,
) -> Result<RateMetrics, MetricsError> {
    let mut sum = 0.0;
    let mut samples = 0usize;
    let mut clamped = false;
    for (&t, &lam) in times.iter().zip(errors) {
        if t <= 0.0 || t < t0 - WINDOW_SLACK || t > t1 + WINDOW_SLACK {
            continue;
        }
        let v = if lam > LOG_FLOOR {
            lam
        } else {
            clamped = true;
            LOG_FLOOR
        };
        sum += v.ln() / t;
        samples += 1;
    }
    if samples == 0 {
        return Err(MetricsError::EmptyWindow { t0, t1 });
    }
    Ok(RateMetrics {
        r: -sum / samples as f64,
        samples,
        clamped,
    })
}

/// `Λ = n⁻¹ Σ_i |λ₂ − λ_{2,i}|`.
pub fn estimation_error(lambda2: f64, estimates: &[f64]) -> f64 {
    estimates.iter().map(|e| (lambda2 - e).abs()).sum::<f64>() / estimates.len() as f64
}

/// Per-row estimates and errors from recorded `y⁽²⁾` rows.
pub fn metrics(
    params: &DpiaParams,
    times: &[f64],
    y2_rows: &[Vec<f64>],
    lambda2: f64,
) -> Result<(Vec<f64>, RateMetrics), MetricsError> {
    let errors: Vec<f64> = y2_rows
        .iter()
        .map(|row| {
            let est: Vec<f64> = row.iter().map(|&y| params.estimate(y)).collect();
            estimation_error(lambda2, &est)
        })
        .collect();
    let rate = convergence_rate(times, &errors, params.t0, params.t1)?;
    Ok((errors, rate))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpiaResult {
    /// Rows `[ζ, y⁽¹⁾, q⁽¹⁾, y⁽²⁾, q⁽²⁾]` at the recorded times.
    pub trajectory: Trajectory,
    pub lambda2_true: f64,
    /// `λ_{2,i}` at the recorded times.
    pub estimates: Vec<Vec<f64>>,
    /// Λ at every integration step, not only the recorded ones.
    pub error_times: Vec<f64>,
    pub error: Vec<f64>,
    pub rate: Option<RateMetrics>,
    pub classification: Classification,
    pub record_every: usize,
}

impl DpiaResult {
    pub fn final_estimates(&self) -> &[f64] {
        self.estimates.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn median_estimate(&self) -> f64 {
        let mut v = self.final_estimates().to_vec();
        v.sort_by(f64::total_cmp);
        let k = v.len();
        if k == 0 {
            f64::NAN
        } else if k % 2 == 1 {
            v[k / 2]
        } else {
            0.5 * (v[k / 2 - 1] + v[k / 2])
        }
    }

    pub fn relative_error(&self) -> f64 {
        (self.median_estimate() - self.lambda2_true).abs() / self.lambda2_true
    }

    /// `max_ij |λ_{2,i} − λ_{2,j}|` at the final time.
    pub fn spread(&self) -> f64 {
        let e = self.final_estimates();
        let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    pub fn summary(&self) -> DpiaSummary {
        DpiaSummary {
            n: self.trajectory.n,
            lambda2: self.lambda2_true,
            median_estimate: self.median_estimate(),
            relative_error: self.relative_error(),
            final_error: self.error.last().copied().unwrap_or(f64::NAN),
            r: self.rate.map(|r| r.r),
            classification: self.classification,
            status: self.trajectory.status.clone(),
        }
    }

    /// `t,Lambda` at the recorded times.
    pub fn write_error_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "Lambda"])?;
        let last = self.error.len().saturating_sub(1);
        for k in (0..self.error.len()).filter(|k| k % self.record_every == 0 || *k == last) {
            w.write_record([self.error_times[k].to_string(), self.error[k].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpiaSummary {
    pub n: usize,
    pub lambda2: f64,
    pub median_estimate: f64,
    pub relative_error: f64,
    pub final_error: f64,
    pub r: Option<f64>,
    pub classification: Classification,
    pub status: RunStatus,
}

/// Seeded ζ(0) with components uniform in (0, 1).
pub fn initial_zeta(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let v: f64 = rng.random();
            if v > 0.0 {
                break v;
            }
        })
        .collect()
}

/// Runs the estimator on the unit-weight version of `graph`'s topology.
pub fn run_dpia(
    graph: &WeightedGraph,
    params: &DpiaParams,
    attack: &AttackSpec,
    config: &SimConfig,
    zeta_seed: u64,
) -> Result<DpiaResult, SimError> {
    run_dpia_from(
        graph,
        params,
        attack,
        config,
        &initial_zeta(graph.node_count(), zeta_seed),
    )
}

pub fn run_dpia_from(
    graph: &WeightedGraph,
    params: &DpiaParams,
    attack: &AttackSpec,
    config: &SimConfig,
    zeta0: &[f64],
) -> Result<DpiaResult, SimError> {
    params.validate()?;
    config.validate()?;
    if config.dim != 1 {
        return Err(SimError::InvalidConfig(
            "the estimator runs on scalar states".into(),
        ));
    }
    let topo = graph.with_uniform_weight(1.0)?;
    let n = topo.node_count();
    if zeta0.len() != n {
        return Err(SimError::StateLength {
            got: zeta0.len(),
            expected: n,
        });
    }
    let lambda2 = topo.spectral().lambda_2();
    let coding = params.coding(&topo)?;
    let mut sys = PiAceSystem::new(&topo, &coding, attack)?;
    let kernel = StepKernel::new(&topo, 1);
    let ones = vec![1.0; topo.edge_count()];
    let (k1, k2, k3) = (params.k1, params.k2, params.k3);

    let mut columns = Vec::with_capacity(5 * n);
    for prefix in ["zeta", "y1", "q1", "y2", "q2"] {
        columns.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    let mut traj = Trajectory::new(n, 1, columns);
    let mut x = vec![0.0; 5 * n];
    x[..n].copy_from_slice(zeta0);
    let mut rk = Rk4::new(5 * n);
    let mut c2 = vec![0.0; n];
    let steps = config.steps();
    let mut estimates = Vec::new();
    let mut error_times = Vec::with_capacity(steps + 1);
    let mut error = Vec::with_capacity(steps + 1);
    let mut est = vec![0.0; n];

    let mut rhs = |t: f64, s: &[f64], ds: &mut [f64]| -> Result<(), crate::error::CodingError> {
        sys.update_gains(t)?;
        let (z, rest) = s.split_at(n);
        let (y1, rest) = rest.split_at(n);
        let (q1, rest) = rest.split_at(n);
        let (y2, q2) = rest.split_at(n);
        for i in 0..n {
            c2[i] = z[i] * z[i];
        }
        let (dz, drest) = ds.split_at_mut(n);
        let (dy1, drest) = drest.split_at_mut(n);
        let (dq1, drest) = drest.split_at_mut(n);
        let (dy2, dq2) = drest.split_at_mut(n);
        for i in 0..n {
            dz[i] = -k1 * y1[i] - k3 * (y2[i] - 1.0) * z[i];
        }
        kernel.accumulate(&ones, z, -k2, dz);
        sys.eval(z, y1, q1, dy1, dq1);
        sys.eval(&c2, y2, q2, dy2, dq2);
        Ok(())
    };

    for k in 0..=steps {
        let t = k as f64 * config.dt;
        for (e, y) in est.iter_mut().zip(&x[3 * n..4 * n]) {
            *e = params.estimate(*y);
        }
        error_times.push(t);
        error.push(estimation_error(lambda2, &est));
        if k % config.record_every == 0 || k == steps {
            traj.push(t, &x, Vec::new(), disagreement(&x[3 * n..4 * n], n, 1));
            estimates.push(est.clone());
        }
        if k == steps {
            break;
        }
        if let Err(e) = rk.step(&mut rhs, t, &mut x, config.dt) {
            traj.status = RunStatus::Alert {
                t,
                message: e.to_string(),
            };
            break;
        }
        if x.iter().any(|v| !v.is_finite()) {
            traj.status = RunStatus::Diverged {
                t: (k + 1) as f64 * config.dt,
            };
            break;
        }
    }

    let rate = convergence_rate(&error_times, &error, params.t0, params.t1).ok();
    // Agreement of the y⁽²⁾ estimates, measured in eigenvalue units. The
    // estimators start in agreement at zero, so the growth rule only looks
    // at samples from t0 on.
    let tol = AGREEMENT_REL_TOL * lambda2 * k2 / k3;
    let from = traj
        .times
        .partition_point(|&t| t < params.t0 - WINDOW_SLACK);
    let from = from.min(traj.len().saturating_sub(1));
    let classification = classify_disagreement(
        &traj.disagreement[from..],
        &traj.status,
        tol,
        DEFAULT_GROWTH_FACTOR,
    )
    .classification;
    Ok(DpiaResult {
        trajectory: traj,
        lambda2_true: lambda2,
        estimates,
        error_times,
        error,
        rate,
        classification,
        record_every: config.record_every,
    })
}

/// Edge probability of the seeded random instances.
pub const RANDOM_EDGE_PROBABILITY: f64 = 0.6;

/// Seeded connected instance with `n ∈ [5, 15]`, unit weights.
pub fn random_instance(seed: u64) -> Result<WeightedGraph, crate::error::GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..=15);
    WeightedGraph::random(n, RANDOM_EDGE_PROBABILITY, (1.0, 1.0), rng.random())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        let times: Vec<f64> = (1..=100).map(|k| k as f64 * 0.37).collect();
        let decay: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let m = convergence_rate(&times, &decay, 0.0, 100.0).unwrap();
        assert!((m.r - 1.0).abs() < 1e-12);
        assert!(!m.clamped);
        let flat = vec![1.0; times.len()];
        assert_eq!(convergence_rate(&times, &flat, 0.0, 100.0).unwrap().r, 0.0);
        assert!(convergence_rate(&times, &flat, 200.0, 300.0).is_err());
        let zeros = vec![0.0; times.len()];
        assert!(
            convergence_rate(&times, &zeros, 0.0, 100.0)
                .unwrap()
                .clamped
        );
    }

    #[test]
    fn affine_estimate_map() {
        let p = DpiaParams::default();
        let rows = vec![vec![1.0; 4]; 3];
        let times = [10.0, 20.0, 30.0];
        let (errors, _) = metrics(&p, &times, &rows, 2.5).unwrap();
        assert!(errors.iter().all(|&e| e == 2.5));
        assert_eq!(p.estimate(0.99), 200.0 * (1.0 - 0.99));
    }

    #[test]
    fn zeta_seed_is_deterministic_and_open_unit() {
        let a = initial_zeta(50, 3);
        assert_eq!(a, initial_zeta(50, 3));
        assert!(a.iter().all(|&v| v > 0.0 && v < 1.0));
        assert_ne!(a, initial_zeta(50, 4));
    }

    #[test]
    fn random_instances_are_in_range() {
        for s in 0..5 {
            let g = random_instance(s).unwrap();
            assert!((5..=15).contains(&g.node_count()));
            assert!(g.is_uniform());
        }
    }
}
