//! Protocol simulators under codeword attacks.
//!
//! Attacks always act on subcodewords; weights are re-decoded at every
//! evaluation of the vector field.

mod attack;
mod kernel;
mod opinion;
mod pi_ace;
mod rk4;
mod sbdc;
mod trajectory;

pub use attack::{AttackSpec, AttackTarget, Deviation, Gain};
pub use kernel::{disagreement, StepKernel};
pub use opinion::{simulate_opinion, OpinionConfig, OpinionRun, DEFAULT_AGREEMENT_TOL};
pub use pi_ace::{simulate_pi_ace, InputSignal, PiAceCoding, PiAceSystem};
pub use rk4::Rk4;
pub use sbdc::{simulate_ct_sbdc, simulate_dt_sbdc, simulate_dt_sbdc_dim, WeightSchedule};
pub use trajectory::{
    classify_disagreement, consensus_check, consensus_check_with, Classification, ConsensusCheck,
    RunStatus, SimConfig, Trajectory, DEFAULT_CONSENSUS_TOL, DEFAULT_DT, DEFAULT_GROWTH_FACTOR,
};
