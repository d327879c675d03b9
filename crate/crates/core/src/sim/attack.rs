//! Codeword attacks: which subcodewords are deviated and by what signal.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::graph::Edge;

/// Broadcast parameters of the PI estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gain {
    Alpha,
    Kp,
    Ki,
}

impl fmt::Display for Gain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gain::Alpha => "alpha",
            Gain::Kp => "kp",
            Gain::Ki => "ki",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackTarget {
    /// The subcodeword of one consensus edge.
    Edge(Edge),
    /// A broadcast parameter shared by all edges.
    Param(Gain),
    /// One edge's copy of a per-edge parameter subcodeword.
    ParamEdge(Gain, Edge),
}

/// A deviation signal `δ(t)`.
#[derive(Clone)]
pub enum Deviation {
    Constant(f64),
    /// Zero before `at`, `value` from `at` on.
    Step {
        at: f64,
        value: f64,
    },
    /// `offset + amplitude · sin(omega t + phase)`.
    Sine {
        offset: f64,
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deviation::Constant(c) => write!(f, "Constant({c})"),
            Deviation::Step { at, value } => write!(f, "Step {{ at: {at}, value: {value} }}"),
            Deviation::Sine {
                offset,
                amplitude,
                omega,
                phase,
            } => write!(
                f,
                "Sine {{ offset: {offset}, amplitude: {amplitude}, omega: {omega}, phase: {phase} }}"
            ),
            Deviation::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Deviation {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Deviation::Constant(c) => *c,
            Deviation::Step { at, value } => {
                if t >= *at {
                    *value
                } else {
                    0.0
                }
            }
            Deviation::Sine {
                offset,
                amplitude,
                omega,
                phase,
            } => offset + amplitude * (omega * t + phase).sin(),
            Deviation::Custom(f) => f(t),
        }
    }

    /// Supremum of `|δ|` where it is known in closed form.
    pub fn bound(&self) -> Option<f64> {
        match self {
            Deviation::Constant(c) => Some(c.abs()),
            Deviation::Step { value, .. } => Some(value.abs()),
            Deviation::Sine {
                offset, amplitude, ..
            } => Some(offset.abs() + amplitude.abs()),
            Deviation::Custom(_) => None,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let finite = match self {
            Deviation::Constant(c) => c.is_finite(),
            Deviation::Step { at, value } => at.is_finite() && value.is_finite(),
            Deviation::Sine {
                offset,
                amplitude,
                omega,
                phase,
            } => [offset, amplitude, omega, phase]
                .iter()
                .all(|v| v.is_finite()),
            Deviation::Custom(_) => true,
        };
        if finite {
            Ok(())
        } else {
            Err(SimError::InvalidAttack(format!(
                "non-finite deviation {self:?}"
            )))
        }
    }
}

pub(crate) type GainTarget<'a> = (Gain, Option<Edge>, &'a Deviation);

/// Targets paired with deviations. Untargeted subcodewords are received
/// intact.
#[derive(Debug, Clone, Default)]
pub struct AttackSpec {
    targets: Vec<(AttackTarget, Deviation)>,
}

impl AttackSpec {
    pub fn none() -> Self {
        AttackSpec::default()
    }

    pub fn single_edge(edge: Edge, deviation: Deviation) -> Self {
        AttackSpec {
            targets: vec![(AttackTarget::Edge(edge), deviation)],
        }
    }

    pub fn broadcast(gain: Gain, deviation: Deviation) -> Self {
        AttackSpec {
            targets: vec![(AttackTarget::Param(gain), deviation)],
        }
    }

    pub fn with(mut self, target: AttackTarget, deviation: Deviation) -> Result<Self, SimError> {
        deviation.validate()?;
        if self.targets.iter().any(|(t, _)| *t == target) {
            return Err(SimError::InvalidAttack(format!(
                "target {target:?} listed twice"
            )));
        }
        self.targets.push((target, deviation));
        Ok(self)
    }

    pub fn targets(&self) -> &[(AttackTarget, Deviation)] {
        &self.targets
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Exactly one target, and it is a consensus edge.
    pub fn is_single_edge(&self) -> bool {
        matches!(self.targets.as_slice(), [(AttackTarget::Edge(_), _)])
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (i, (t, d)) in self.targets.iter().enumerate() {
            d.validate()?;
            if self.targets[..i].iter().any(|(o, _)| o == t) {
                return Err(SimError::InvalidAttack(format!(
                    "target {t:?} listed twice"
                )));
            }
        }
        Ok(())
    }

    /// Edges attacked on the consensus-weight subcodeword. Fails on
    /// parameter targets, which only the PI estimator understands.
    pub(crate) fn edge_targets(&self) -> Result<Vec<(Edge, &Deviation)>, SimError> {
        self.validate()?;
        self.targets
            .iter()
            .map(|(t, d)| match t {
                AttackTarget::Edge(e) => Ok((*e, d)),
                other => Err(SimError::InvalidAttack(format!(
                    "{other:?} does not apply to a first-order protocol"
                ))),
            })
            .collect()
    }

    /// Deviations for the PI estimator: `(gain, None)` for broadcast
    /// targets, `(gain, Some(edge))` for per-edge ones.
    pub(crate) fn gain_targets(&self) -> Result<Vec<GainTarget<'_>>, SimError> {
        self.validate()?;
        self.targets
            .iter()
            .map(|(t, d)| match t {
                AttackTarget::Param(g) => Ok((*g, None, d)),
                AttackTarget::ParamEdge(Gain::Alpha, _) => Err(SimError::InvalidAttack(
                    "alpha is a single broadcast subcodeword".into(),
                )),
                AttackTarget::ParamEdge(g, e) => Ok((*g, Some(*e), d)),
                AttackTarget::Edge(e) => Err(SimError::InvalidAttack(format!(
                    "edge target {e} needs a gain; use ParamEdge"
                ))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signals() {
        assert_eq!(Deviation::Constant(-4.7).at(3.0), -4.7);
        let s = Deviation::Step {
            at: 1.0,
            value: 2.0,
        };
        assert_eq!((s.at(0.5), s.at(1.0)), (0.0, 2.0));
        let w = Deviation::Sine {
            offset: 1.0,
            amplitude: 2.0,
            omega: 1.0,
            phase: 0.0,
        };
        assert!((w.at(std::f64::consts::FRAC_PI_2) - 3.0).abs() < 1e-12);
        assert_eq!(w.bound(), Some(3.0));
    }

    #[test]
    fn spec_validation() {
        let e = Edge::new(3, 4);
        let a = AttackSpec::single_edge(e, Deviation::Constant(-1.0));
        assert!(a.is_single_edge());
        assert!(a
            .clone()
            .with(AttackTarget::Edge(e), Deviation::Constant(1.0))
            .is_err());
        assert!(AttackSpec::none()
            .with(AttackTarget::Edge(e), Deviation::Constant(f64::NAN))
            .is_err());
        assert!(AttackSpec::broadcast(Gain::Ki, Deviation::Constant(1.0))
            .edge_targets()
            .is_err());
        assert!(a.gain_targets().is_err());
    }
}
