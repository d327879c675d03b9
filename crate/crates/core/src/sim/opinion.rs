//! Bounded-confidence opinion dynamics with encoded weights.
//!
//! Agent `i` listens at step `t` only to neighbours within `Γυ^t` and moves
//! by the average of the decoded weighted differences.

use serde::Serialize;

use crate::coding::CodewordTable;
use crate::error::SimError;
use crate::graph::{components_of, Edge, WeightedGraph};
use crate::sim::attack::AttackSpec;
use crate::sim::kernel::disagreement;
use crate::sim::sbdc::{check_state, WeightSchedule};
use crate::sim::trajectory::{node_columns, RunStatus, Trajectory};

/// States closer than this count as agreeing when grouping communities.
pub const DEFAULT_AGREEMENT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpinionConfig {
    pub gamma: f64,
    pub upsilon: f64,
    pub steps: usize,
    pub agreement_tol: f64,
}

impl OpinionConfig {
    pub fn new(gamma: f64, upsilon: f64, steps: usize) -> Self {
        OpinionConfig {
            gamma,
            upsilon,
            steps,
            agreement_tol: DEFAULT_AGREEMENT_TOL,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.upsilon > 0.0 && self.upsilon < 1.0) {
            return Err(SimError::InvalidConfig(format!(
                "upsilon must lie in (0, 1), got {}",
                self.upsilon
            )));
        }
        if !(self.agreement_tol > 0.0) {
            return Err(SimError::InvalidConfig(
                "agreement tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Confidence radius `Γυ^t`.
    pub fn radius(&self, t: usize) -> f64 {
        self.gamma * self.upsilon.powi(t as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpinionRun {
    pub trajectory: Trajectory,
    /// Groups of nodes joined by edges whose endpoints agree within the
    /// agreement tolerance, one partition per recorded step.
    pub communities: Vec<Vec<Vec<usize>>>,
    /// Number of components of the graph of edges inside the confidence
    /// radius, per recorded step.
    pub active_components: Vec<usize>,
}

impl OpinionRun {
    pub fn community_counts(&self) -> Vec<usize> {
        self.communities.iter().map(Vec::len).collect()
    }

    pub fn final_communities(&self) -> &[Vec<usize>] {
        self.communities.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let counts: Vec<f64> = self.communities.iter().map(|c| c.len() as f64).collect();
        self.trajectory.write_csv(out, &[("communities", &counts)])
    }
}

fn grouped(n: usize, edges: &[Edge], x: &[f64], within: f64) -> Vec<Vec<usize>> {
    components_of(
        n,
        edges
            .iter()
            .copied()
            .filter(|e| (x[e.u - 1] - x[e.v - 1]).abs() <= within),
    )
}

pub fn simulate_opinion(
    graph: &WeightedGraph,
    table: &CodewordTable,
    attack: &AttackSpec,
    config: &OpinionConfig,
    x0: &[f64],
) -> Result<OpinionRun, SimError> {
    config.validate()?;
    let n = graph.node_count();
    check_state(x0, n)?;
    let schedule = WeightSchedule::new(graph, table, attack)?;
    let edges = graph.edges();
    let mut traj = Trajectory::new(n, 1, node_columns("x", n, 1));
    let mut communities = Vec::with_capacity(config.steps + 1);
    let mut active = Vec::with_capacity(config.steps + 1);
    let mut x = x0.to_vec();
    let mut next = x.clone();
    let mut w = vec![0.0; edges.len()];
    let mut pull = vec![0.0; n];
    let mut count = vec![0usize; n];
    for k in 0..=config.steps {
        let t = k as f64;
        let radius = config.radius(k);
        if let Err(e) = schedule.fill(t, &mut w) {
            traj.status = RunStatus::Alert {
                t,
                message: e.to_string(),
            };
            break;
        }
        traj.push(t, &x, w.clone(), disagreement(&x, n, 1));
        communities.push(grouped(n, edges, &x, config.agreement_tol));
        active.push(grouped(n, edges, &x, radius).len());
        if k == config.steps {
            break;
        }
        pull.fill(0.0);
        count.fill(0);
        for (e, &we) in edges.iter().zip(&w) {
            let (i, j) = (e.u - 1, e.v - 1);
            let h = x[i] - x[j];
            if h.abs() <= radius {
                pull[i] += we * h;
                pull[j] -= we * h;
                count[i] += 1;
                count[j] += 1;
            }
        }
        for i in 0..n {
            next[i] = if count[i] == 0 {
                x[i]
            } else {
                x[i] - pull[i] / count[i] as f64
            };
        }
        std::mem::swap(&mut x, &mut next);
        if x.iter().any(|v| !v.is_finite()) {
            traj.status = RunStatus::Diverged { t: t + 1.0 };
            break;
        }
    }
    Ok(OpinionRun {
        trajectory: traj,
        communities,
        active_components: active,
    })
}
