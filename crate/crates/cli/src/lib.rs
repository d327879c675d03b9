//! Front-end for `sbdc-core`: scenario files, bundled examples, margin
//! reports and batch runs.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod error;
pub mod refs;
pub mod run;
pub mod scenario;

pub use error::CliError;
pub use run::{margins, run_scenario, MarginSummary, RunSummary};
pub use scenario::{Protocol, Scenario};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SBDC_OUTPUT_DIR";
