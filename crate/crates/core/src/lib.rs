//! Robustness certificates and simulators for consensus networks whose edge
//! weights are delivered as encoded subcodewords.
//!
//! Hand-checked quantities live in [`margins`]; [`sim`] and [`dpia`] run the
//! corresponding dynamics under codeword attacks.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundled;
pub mod coding;
pub mod dpia;
pub mod error;
pub mod graph;
pub mod io;
pub mod margins;
pub mod sim;

pub use coding::{Codeword, CodewordTable, DecoderSpec, DecodingFunction, TableMode};
pub use error::{CodingError, GraphError, MarginError, MetricsError, ParseError, SimError};
pub use graph::{Edge, SpectralSummary, WeightedGraph};
pub use margins::{
    DtMarginReport, GainDeviations, MarginReport, PiAceParams, SecondOrderMargins,
    SecondOrderSpectrum, Verdict,
};
