//! Proportional–integral average consensus estimator with encoded gains.
//!
//! ```text
//! ẏ_i = α(c_i − y_i) − Σ_j kp_ij (y_i − y_j) + Σ_j ki_ij (q_i − q_j)
//! q̇_i = −Σ_j ki_ij (y_i − y_j)
//! ```
//!
//! over the unweighted topology; only the encoded gains weight the edges.

use crate::coding::{Codeword, CodewordTable, DecodingFunction};
use crate::error::{CodingError, SimError};
use crate::graph::{Edge, WeightedGraph};
use crate::margins::PiAceParams;
use crate::sim::attack::{AttackSpec, Deviation, Gain};
use crate::sim::kernel::StepKernel;
use crate::sim::sbdc::{check_state, integrate};
use crate::sim::trajectory::{node_columns, SimConfig, Trajectory};

/// Encoded estimator gains. `kp` and `ki` may be per-edge or broadcast
/// tables; α is always one broadcast subcodeword.
#[derive(Debug, Clone)]
pub struct PiAceCoding {
    pub alpha: Codeword,
    pub kp: CodewordTable,
    pub ki: CodewordTable,
}

impl PiAceCoding {
    /// Broadcast encoding of `params` under the three decoders.
    pub fn broadcast(
        graph: &WeightedGraph,
        params: PiAceParams,
        decoders: [DecodingFunction; 3],
    ) -> Result<Self, SimError> {
        params
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        let [da, dp, di] = decoders;
        Ok(PiAceCoding {
            alpha: Codeword::for_weight(params.alpha, da)?,
            kp: CodewordTable::broadcast(graph.edges(), Codeword::for_weight(params.kp, dp)?),
            ki: CodewordTable::broadcast(graph.edges(), Codeword::for_weight(params.ki, di)?),
        })
    }

    /// Per-edge encoding with the same decoder on every edge of a gain.
    pub fn per_edge(
        graph: &WeightedGraph,
        params: PiAceParams,
        decoders: [DecodingFunction; 3],
    ) -> Result<Self, SimError> {
        params
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        let [da, dp, di] = decoders;
        let kp = Codeword::for_weight(params.kp, dp)?;
        let ki = Codeword::for_weight(params.ki, di)?;
        Ok(PiAceCoding {
            alpha: Codeword::for_weight(params.alpha, da)?,
            kp: CodewordTable::per_edge(graph.edges().iter().map(|&e| (e, kp.clone()))),
            ki: CodewordTable::per_edge(graph.edges().iter().map(|&e| (e, ki.clone()))),
        })
    }

    /// Decoded nominal `(α, kp per edge, ki per edge)` in graph edge order.
    pub fn nominal(&self, graph: &WeightedGraph) -> Result<(f64, Vec<f64>, Vec<f64>), SimError> {
        let alpha = self.alpha.nominal()?;
        let kp = self
            .kp
            .aligned(graph)?
            .iter()
            .map(|c| c.nominal())
            .collect::<Result<Vec<_>, _>>()?;
        let ki = self
            .ki
            .aligned(graph)?
            .iter()
            .map(|c| c.nominal())
            .collect::<Result<Vec<_>, _>>()?;
        Ok((alpha, kp, ki))
    }
}

/// Node inputs `c(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    Constant(Vec<f64>),
    /// `offset_i + amplitude_i · sin(omega t + phase)`.
    Sinusoid {
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        omega: f64,
        phase: f64,
    },
}

impl InputSignal {
    pub fn len(&self) -> usize {
        match self {
            InputSignal::Constant(c) => c.len(),
            InputSignal::Sinusoid { offset, .. } => offset.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fill(&self, t: f64, out: &mut [f64]) {
        match self {
            InputSignal::Constant(c) => out.copy_from_slice(c),
            InputSignal::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => {
                let s = (omega * t + phase).sin();
                for ((o, a), v) in offset.iter().zip(amplitude).zip(out.iter_mut()) {
                    *v = o + a * s;
                }
            }
        }
    }

    /// Average of the inputs at time `t`.
    pub fn mean(&self, t: f64) -> f64 {
        let mut v = vec![0.0; self.len()];
        self.fill(t, &mut v);
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone)]
struct GainChannel {
    codewords: Vec<Codeword>,
    /// `(edge index or None for all edges, deviation)`.
    deviations: Vec<(Option<usize>, Deviation)>,
    /// Edges reached by at least one deviation.
    affected: Vec<bool>,
    nominal: Vec<f64>,
    shift: Vec<f64>,
}

impl GainChannel {
    fn new(
        codewords: Vec<Codeword>,
        deviations: Vec<(Option<usize>, Deviation)>,
        nominal: Vec<f64>,
    ) -> Self {
        let m = codewords.len();
        let mut affected = vec![false; m];
        for (idx, _) in &deviations {
            match idx {
                Some(i) => affected[*i] = true,
                None => affected.iter_mut().for_each(|a| *a = true),
            }
        }
        GainChannel {
            codewords,
            deviations,
            affected,
            nominal,
            shift: vec![0.0; m],
        }
    }

    fn fill(&mut self, t: f64, out: &mut [f64]) -> Result<(), CodingError> {
        out.copy_from_slice(&self.nominal);
        if self.deviations.is_empty() {
            return Ok(());
        }
        self.shift.fill(0.0);
        for (idx, dev) in &self.deviations {
            let d = dev.at(t);
            match idx {
                Some(i) => self.shift[*i] += d,
                None => self.shift.iter_mut().for_each(|s| *s += d),
            }
        }
        for (i, o) in out.iter_mut().enumerate() {
            if self.affected[i] {
                *o = self.codewords[i].decode_with(self.shift[i])?;
            }
        }
        Ok(())
    }
}

/// Vector field of one estimator, decoded gains included. Shared by the
/// standalone simulator and the power-iteration composition.
#[derive(Debug, Clone)]
pub struct PiAceSystem {
    kernel: StepKernel,
    alpha_cw: Codeword,
    alpha_devs: Vec<Deviation>,
    alpha_nominal: f64,
    kp: GainChannel,
    ki: GainChannel,
    alpha: f64,
    kp_now: Vec<f64>,
    ki_now: Vec<f64>,
}

impl PiAceSystem {
    pub fn new(
        graph: &WeightedGraph,
        coding: &PiAceCoding,
        attack: &AttackSpec,
    ) -> Result<Self, SimError> {
        let edge_idx = |e: Edge| {
            graph
                .edge_index(e.u, e.v)
                .ok_or_else(|| SimError::InvalidAttack(format!("{e} is not an edge")))
        };
        let (alpha_nominal, kp_nom, ki_nom) = coding.nominal(graph)?;
        for (name, v) in [("alpha", alpha_nominal)]
            .into_iter()
            .chain(kp_nom.iter().map(|&v| ("kp", v)))
            .chain(ki_nom.iter().map(|&v| ("ki", v)))
        {
            if !(v > 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "nominal {name} decodes to {v}, must be positive"
                )));
            }
        }
        let mut alpha_devs = Vec::new();
        let mut kp_devs = Vec::new();
        let mut ki_devs = Vec::new();
        for (gain, edge, dev) in attack.gain_targets()? {
            let idx = edge.map(edge_idx).transpose()?;
            match gain {
                Gain::Alpha => alpha_devs.push(dev.clone()),
                Gain::Kp => kp_devs.push((idx, dev.clone())),
                Gain::Ki => ki_devs.push((idx, dev.clone())),
            }
        }
        let m = graph.edge_count();
        Ok(PiAceSystem {
            kernel: StepKernel::new(graph, 1),
            alpha_cw: coding.alpha.clone(),
            alpha_devs,
            alpha_nominal,
            kp: GainChannel::new(
                coding.kp.aligned(graph)?.into_iter().cloned().collect(),
                kp_devs,
                kp_nom,
            ),
            ki: GainChannel::new(
                coding.ki.aligned(graph)?.into_iter().cloned().collect(),
                ki_devs,
                ki_nom,
            ),
            alpha: alpha_nominal,
            kp_now: vec![0.0; m],
            ki_now: vec![0.0; m],
        })
    }

    pub fn node_count(&self) -> usize {
        self.kernel.node_count()
    }

    /// Re-decodes every attacked gain at time `t`.
    pub fn update_gains(&mut self, t: f64) -> Result<(), CodingError> {
        self.alpha = if self.alpha_devs.is_empty() {
            self.alpha_nominal
        } else {
            let d: f64 = self.alpha_devs.iter().map(|dev| dev.at(t)).sum();
            self.alpha_cw.decode_with(d)?
        };
        self.kp.fill(t, &mut self.kp_now)?;
        self.ki.fill(t, &mut self.ki_now)?;
        Ok(())
    }

    /// `[α, kp_1..kp_m, ki_1..ki_m]` as last decoded.
    pub fn current_gains(&self) -> Vec<f64> {
        let mut g = Vec::with_capacity(1 + 2 * self.kp_now.len());
        g.push(self.alpha);
        g.extend_from_slice(&self.kp_now);
        g.extend_from_slice(&self.ki_now);
        g
    }

    /// Derivatives at the gains last set by [`update_gains`](Self::update_gains).
    pub fn eval(&self, c: &[f64], y: &[f64], q: &[f64], dy: &mut [f64], dq: &mut [f64]) {
        for i in 0..y.len() {
            dy[i] = self.alpha * (c[i] - y[i]);
        }
        self.kernel.accumulate(&self.kp_now, y, -1.0, dy);
        self.kernel.accumulate(&self.ki_now, q, 1.0, dy);
        dq.fill(0.0);
        self.kernel.accumulate(&self.ki_now, y, -1.0, dq);
    }
}

/// Integrates the estimator; the state row is `[y_1..y_n, q_1..q_n]` and the
/// disagreement is measured on `y`.
pub fn simulate_pi_ace(
    graph: &WeightedGraph,
    coding: &PiAceCoding,
    attack: &AttackSpec,
    input: &InputSignal,
    y0: &[f64],
    q0: &[f64],
    config: &SimConfig,
) -> Result<Trajectory, SimError> {
    config.validate()?;
    if config.dim != 1 {
        return Err(SimError::InvalidConfig(
            "the estimator runs on scalar states".into(),
        ));
    }
    let n = graph.node_count();
    check_state(y0, n)?;
    check_state(q0, n)?;
    if input.len() != n {
        return Err(SimError::StateLength {
            got: input.len(),
            expected: n,
        });
    }
    let mut sys = PiAceSystem::new(graph, coding, attack)?;
    let mut audit_sys = sys.clone();
    let mut x0 = y0.to_vec();
    x0.extend_from_slice(q0);
    let mut columns = node_columns("y", n, 1);
    columns.extend(node_columns("q", n, 1));
    let mut c = vec![0.0; n];
    Ok(integrate(
        config,
        n,
        columns,
        &x0,
        |t, x, dx| {
            sys.update_gains(t)?;
            input.fill(t, &mut c);
            let (y, q) = x.split_at(n);
            let (dy, dq) = dx.split_at_mut(n);
            sys.eval(&c, y, q, dy, dq);
            Ok(())
        },
        |t| {
            audit_sys.update_gains(t)?;
            Ok(audit_sys.current_gains())
        },
    ))
}
