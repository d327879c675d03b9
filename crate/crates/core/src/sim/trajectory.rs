use std::fmt;
use std::io;

use serde::Serialize;

use crate::error::SimError;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_CONSENSUS_TOL: f64 = 1e-6;
/// Disagreement growth over its running minimum that counts as divergence.
pub const DEFAULT_GROWTH_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Components per agent.
    pub dim: usize,
    /// Keep every `record_every`-th step (the last step is always kept).
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: DEFAULT_DT,
            horizon: 20.0,
            dim: 1,
            record_every: 1,
        }
    }
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        SimConfig {
            dt,
            horizon,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.dim == 0 {
            return Err(SimError::InvalidConfig(
                "state dimension must be at least 1".into(),
            ));
        }
        if self.record_every == 0 {
            return Err(SimError::InvalidConfig(
                "record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of integration steps, `round(T / dt)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// A state became non-finite at time `t`.
    Diverged {
        t: f64,
    },
    /// A decoder rejected a received subcodeword at time `t`.
    Alert {
        t: f64,
        message: String,
    },
}

/// Recorded evolution of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub dim: usize,
    /// CSV column names for the state, after `t`.
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    /// One row per recorded time.
    pub states: Vec<Vec<f64>>,
    /// Decoded weights in effect at each recorded time.
    pub weights: Vec<Vec<f64>>,
    /// `‖x − mean·1‖` of the consensus variable at each recorded time.
    pub disagreement: Vec<f64>,
    pub status: RunStatus,
}

impl Trajectory {
    pub(crate) fn new(n: usize, dim: usize, columns: Vec<String>) -> Self {
        Trajectory {
            n,
            dim,
            columns,
            times: Vec::new(),
            states: Vec::new(),
            weights: Vec::new(),
            disagreement: Vec::new(),
            status: RunStatus::Completed,
        }
    }

    pub(crate) fn push(&mut self, t: f64, state: &[f64], weights: Vec<f64>, disagreement: f64) {
        self.times.push(t);
        self.states.push(state.to_vec());
        self.weights.push(weights);
        self.disagreement.push(disagreement);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Writes `t, <columns…>, <extra…>` with one row per recorded time.
    pub fn write_csv<W: io::Write>(&self, out: W, extra: &[(&str, &[f64])]) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.columns.iter().cloned());
        header.extend(extra.iter().map(|(name, _)| name.to_string()));
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            row.clear();
            row.push(t.to_string());
            row.extend(x.iter().map(f64::to_string));
            row.extend(extra.iter().map(|(_, col)| col[k].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn node_columns(prefix: &str, n: usize, dim: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(n * dim);
    for i in 1..=n {
        if dim == 1 {
            out.push(format!("{prefix}_{i}"));
        } else {
            out.extend((1..=dim).map(|d| format!("{prefix}_{i}_{d}")));
        }
    }
    out
}

/// Decides when to record a step.
pub(crate) fn should_record(step: usize, total: usize, every: usize) -> bool {
    step.is_multiple_of(every) || step == total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Converged,
    Clustered,
    Diverged,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Converged => "converged",
            Classification::Clustered => "clustered",
            Classification::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsensusCheck {
    pub classification: Classification,
    pub final_disagreement: f64,
    pub min_disagreement: f64,
}

pub fn consensus_check(traj: &Trajectory, tol: f64) -> ConsensusCheck {
    consensus_check_with(traj, tol, DEFAULT_GROWTH_FACTOR)
}

/// Converged if the final disagreement is below `tol`; diverged if the run
/// blew up or the disagreement grew by `growth` over its minimum; clustered
/// otherwise.
pub fn consensus_check_with(traj: &Trajectory, tol: f64, growth: f64) -> ConsensusCheck {
    classify_disagreement(&traj.disagreement, &traj.status, tol, growth)
}

/// [`consensus_check_with`] on a bare disagreement series.
pub fn classify_disagreement(
    series: &[f64],
    status: &RunStatus,
    tol: f64,
    growth: f64,
) -> ConsensusCheck {
    let last = series.last().copied().unwrap_or(0.0);
    let min = series
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(f64::INFINITY, f64::min);
    let blew_up = matches!(status, RunStatus::Diverged { .. }) || !last.is_finite();
    let classification = if blew_up {
        Classification::Diverged
    } else if last < tol {
        Classification::Converged
    } else if last >= growth * min {
        Classification::Diverged
    } else {
        Classification::Clustered
    };
    ConsensusCheck {
        classification,
        final_disagreement: last,
        min_disagreement: min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::kernel::disagreement;

    fn traj(rows: &[Vec<f64>]) -> Trajectory {
        let mut t = Trajectory::new(rows[0].len(), 1, node_columns("x", rows[0].len(), 1));
        for (k, r) in rows.iter().enumerate() {
            t.push(k as f64, r, vec![], disagreement(r, r.len(), 1));
        }
        t
    }

    #[test]
    fn classification_examples() {
        let c = consensus_check(&traj(&[vec![0.0, 1.0], vec![0.5, 0.5]]), 1e-6);
        assert_eq!(c.classification, Classification::Converged);
        assert_eq!(c.final_disagreement, 0.0);

        let flat = vec![vec![0.0, 0.0, 1.0, 1.0]; 5];
        assert_eq!(
            consensus_check(&traj(&flat), 1e-6).classification,
            Classification::Clustered
        );

        let grow: Vec<Vec<f64>> = (0..10).map(|k| vec![0.0, (k as f64).exp()]).collect();
        assert_eq!(
            consensus_check(&traj(&grow), 1e-6).classification,
            Classification::Diverged
        );
    }

    #[test]
    fn csv_layout() {
        let t = traj(&[vec![1.0, 2.0], vec![1.5, 1.5]]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &[("communities", &[2.0, 1.0])])
            .unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "t,x_1,x_2,communities\n0,1,2,2\n1,1.5,1.5,1\n");
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 1.0).validate().is_err());
        assert!(SimConfig::new(1e-3, -1.0).validate().is_err());
        assert_eq!(SimConfig::new(1e-3, 20.0).steps(), 20_000);
    }
}
