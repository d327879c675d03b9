//! First-order secure-by-design consensus, continuous and discrete time.
//!
//! Each agent only sees `h_ij(x) = x_i − x_j` and the decoded weight
//! `p_ij(θ_ij + δ_ij(t))`; the Laplacian is never formed.

use crate::coding::{Codeword, CodewordTable};
use crate::error::{CodingError, SimError};
use crate::graph::WeightedGraph;
use crate::sim::attack::{AttackSpec, Deviation};
use crate::sim::kernel::{disagreement, StepKernel};
use crate::sim::rk4::Rk4;
use crate::sim::trajectory::{node_columns, should_record, RunStatus, SimConfig, Trajectory};

/// Tolerance for the nominal decoded weights against the graph weights.
const CONSISTENCY_TOL: f64 = 1e-9;

/// Per-edge decoded weights over time. Untargeted edges are decoded once;
/// targeted ones are re-decoded at every evaluation.
#[derive(Debug, Clone)]
pub struct WeightSchedule {
    nominal: Vec<f64>,
    attacked: Vec<(usize, Codeword, Deviation)>,
}

impl WeightSchedule {
    pub fn new(
        graph: &WeightedGraph,
        table: &CodewordTable,
        attack: &AttackSpec,
    ) -> Result<Self, SimError> {
        table.check_consistent(graph, CONSISTENCY_TOL)?;
        let codewords = table.aligned(graph)?;
        let nominal = codewords
            .iter()
            .map(|cw| cw.nominal())
            .collect::<Result<Vec<_>, _>>()?;
        let mut attacked = Vec::new();
        for (edge, dev) in attack.edge_targets()? {
            let idx = graph
                .edge_index(edge.u, edge.v)
                .ok_or_else(|| SimError::InvalidAttack(format!("{edge} is not an edge")))?;
            attacked.push((idx, codewords[idx].clone(), dev.clone()));
        }
        Ok(WeightSchedule { nominal, attacked })
    }

    pub fn nominal(&self) -> &[f64] {
        &self.nominal
    }

    pub fn fill(&self, t: f64, out: &mut [f64]) -> Result<(), CodingError> {
        out.copy_from_slice(&self.nominal);
        for (idx, cw, dev) in &self.attacked {
            out[*idx] = cw.decode_with(dev.at(t))?;
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> Result<Vec<f64>, CodingError> {
        let mut w = vec![0.0; self.nominal.len()];
        self.fill(t, &mut w)?;
        Ok(w)
    }
}

pub(crate) fn check_state(x0: &[f64], expected: usize) -> Result<(), SimError> {
    if x0.len() != expected {
        return Err(SimError::StateLength {
            got: x0.len(),
            expected,
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SimError::InvalidConfig(
            "initial state must be finite".into(),
        ));
    }
    Ok(())
}

/// Integrates `ẋ = f(t, x)` with RK4 and records a trajectory. The
/// disagreement is measured on the first `n·dim` entries. `audit(t)`
/// supplies the decoded weights stored with each recorded row.
pub(crate) fn integrate<F, A>(
    config: &SimConfig,
    n: usize,
    columns: Vec<String>,
    x0: &[f64],
    mut rhs: F,
    mut audit: A,
) -> Trajectory
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), CodingError>,
    A: FnMut(f64) -> Result<Vec<f64>, CodingError>,
{
    let dim = config.dim;
    let mut traj = Trajectory::new(n, dim, columns);
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(x.len());
    let steps = config.steps();
    let cons = n * dim;
    for k in 0..=steps {
        let t = k as f64 * config.dt;
        if should_record(k, steps, config.record_every) {
            match audit(t) {
                Ok(w) => traj.push(t, &x, w, disagreement(&x[..cons], n, dim)),
                Err(e) => {
                    traj.status = RunStatus::Alert {
                        t,
                        message: e.to_string(),
                    };
                    return traj;
                }
            }
        }
        if k == steps {
            break;
        }
        let mut failed_at = t;
        let res = rk.step(
            &mut |s, y: &[f64], dy: &mut [f64]| {
                failed_at = s;
                rhs(s, y, dy)
            },
            t,
            &mut x,
            config.dt,
        );
        if let Err(e) = res {
            traj.status = RunStatus::Alert {
                t: failed_at,
                message: e.to_string(),
            };
            return traj;
        }
        if x.iter().any(|v| !v.is_finite()) {
            let t1 = (k + 1) as f64 * config.dt;
            traj.status = RunStatus::Diverged { t: t1 };
            return traj;
        }
    }
    traj
}

/// `ẋ_i = −Σ_{j∈N_i} p_ij(θ_ij + δ_ij(t)) (x_i − x_j)`, per component.
///
/// `x0` is node-major with `config.dim` components per node.
pub fn simulate_ct_sbdc(
    graph: &WeightedGraph,
    table: &CodewordTable,
    attack: &AttackSpec,
    x0: &[f64],
    config: &SimConfig,
) -> Result<Trajectory, SimError> {
    config.validate()?;
    let n = graph.node_count();
    check_state(x0, n * config.dim)?;
    let schedule = WeightSchedule::new(graph, table, attack)?;
    let kernel = StepKernel::new(graph, config.dim);
    let mut w = vec![0.0; graph.edge_count()];
    Ok(integrate(
        config,
        n,
        node_columns("x", n, config.dim),
        x0,
        |t, x, dx| {
            schedule.fill(t, &mut w)?;
            dx.fill(0.0);
            kernel.accumulate(&w, x, -1.0, dx);
            Ok(())
        },
        |t| schedule.at(t),
    ))
}

/// `x(t+1) = x(t) − ε Σ p_ij(θ_ij + δ_ij(t)) h_ij(x(t))` for `steps`
/// iterations, with `t` the iteration index.
pub fn simulate_dt_sbdc(
    graph: &WeightedGraph,
    table: &CodewordTable,
    attack: &AttackSpec,
    epsilon: f64,
    x0: &[f64],
    steps: usize,
) -> Result<Trajectory, SimError> {
    simulate_dt_sbdc_dim(graph, table, attack, epsilon, x0, steps, 1)
}

pub fn simulate_dt_sbdc_dim(
    graph: &WeightedGraph,
    table: &CodewordTable,
    attack: &AttackSpec,
    epsilon: f64,
    x0: &[f64],
    steps: usize,
    dim: usize,
) -> Result<Trajectory, SimError> {
    let upper = 2.0 / graph.spectral().lambda_max();
    if !(epsilon > 0.0 && epsilon < upper) {
        return Err(SimError::InvalidConfig(format!(
            "step gain {epsilon} outside (0, {upper})"
        )));
    }
    if dim == 0 {
        return Err(SimError::InvalidConfig(
            "state dimension must be at least 1".into(),
        ));
    }
    let n = graph.node_count();
    check_state(x0, n * dim)?;
    let schedule = WeightSchedule::new(graph, table, attack)?;
    let kernel = StepKernel::new(graph, dim);
    let mut traj = Trajectory::new(n, dim, node_columns("x", n, dim));
    let mut x = x0.to_vec();
    let mut delta = vec![0.0; x.len()];
    let mut w = vec![0.0; graph.edge_count()];
    for k in 0..=steps {
        let t = k as f64;
        if let Err(e) = schedule.fill(t, &mut w) {
            traj.status = RunStatus::Alert {
                t,
                message: e.to_string(),
            };
            return Ok(traj);
        }
        traj.push(t, &x, w.clone(), disagreement(&x, n, dim));
        if k == steps {
            break;
        }
        delta.fill(0.0);
        kernel.accumulate(&w, &x, epsilon, &mut delta);
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi -= di;
        }
        if x.iter().any(|v| !v.is_finite()) {
            traj.status = RunStatus::Diverged { t: t + 1.0 };
            return Ok(traj);
        }
    }
    Ok(traj)
}
