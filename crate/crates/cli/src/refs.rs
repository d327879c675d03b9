//! Graph and codeword-table references: files, bundled data and seeded
//! random instances.

use std::path::Path;
use std::sync::OnceLock;

use sbdc_core::bundled;
use sbdc_core::coding::CodewordTable;
use sbdc_core::dpia;
use sbdc_core::graph::WeightedGraph;
use sbdc_core::io::{self, CodewordFile};
use sbdc_core::sim::PiAceCoding;

use crate::error::CliError;

pub const BUNDLED_PREFIX: &str = "bundled:";
pub const RANDOM_PREFIX: &str = "random:";

/// Bundled graph names accepted after `bundled:`.
pub const BUNDLED_GRAPHS: [&str; 3] = ["five_node", "five_node_topology", "five_node_opinion"];

/// Verifies the bundled reconstruction once per process.
pub fn ensure_bundled_invariants() -> Result<(), CliError> {
    static CHECK: OnceLock<Result<(), String>> = OnceLock::new();
    CHECK
        .get_or_init(bundled::check_five_node_invariants)
        .clone()
        .map_err(|e| CliError::domain(format!("bundled data failed its self-check: {e}")))
}

pub fn resolve_graph(reference: &str, base: &Path) -> Result<WeightedGraph, CliError> {
    if let Some(name) = reference.strip_prefix(BUNDLED_PREFIX) {
        ensure_bundled_invariants()?;
        return match name {
            "five_node" => Ok(bundled::five_node_weighted()),
            "five_node_topology" => Ok(bundled::five_node_topology()),
            "five_node_opinion" => Ok(bundled::five_node_uniform(bundled::OPINION_ALPHA)),
            other => Err(CliError::input(format!(
                "unknown bundled graph '{other}' (known: {})",
                BUNDLED_GRAPHS.join(", ")
            ))),
        };
    }
    if let Some(seed) = reference.strip_prefix(RANDOM_PREFIX) {
        let seed: u64 = seed
            .parse()
            .map_err(|_| CliError::input(format!("bad random graph seed '{seed}'")))?;
        return dpia::random_instance(seed).map_err(|e| CliError::domain(e.to_string()));
    }
    Ok(io::load_graph(&base.join(reference))?)
}

/// Seed of a `random:SEED` reference.
pub fn random_seed(reference: &str) -> Option<u64> {
    reference.strip_prefix(RANDOM_PREFIX)?.parse().ok()
}

/// Consensus-weight table; `None` means identity decoders on `graph`.
pub fn resolve_table(
    reference: Option<&str>,
    graph: &WeightedGraph,
    base: &Path,
) -> Result<CodewordTable, CliError> {
    let Some(reference) = reference else {
        return Ok(CodewordTable::identity(graph));
    };
    if reference == "identity" {
        return Ok(CodewordTable::identity(graph));
    }
    if let Some(name) = reference.strip_prefix(BUNDLED_PREFIX) {
        ensure_bundled_invariants()?;
        if name == "opinion" {
            return bundled::opinion_table(bundled::OPINION_ALPHA)
                .map_err(|e| CliError::input(e.to_string()));
        }
        if let Some(beta) = name.strip_prefix("five_node:") {
            let beta: f64 = beta
                .parse()
                .map_err(|_| CliError::input(format!("bad log base '{beta}'")))?;
            return bundled::five_node_table(beta).map_err(|e| CliError::input(e.to_string()));
        }
        return Err(CliError::input(format!(
            "unknown bundled codeword table '{name}' (known: opinion, five_node:BETA)"
        )));
    }
    Ok(CodewordFile::load(&base.join(reference))?.edge_table()?)
}

/// Estimator gains; `None` means the default broadcast encoding.
pub fn resolve_pi_ace(
    reference: Option<&str>,
    graph: &WeightedGraph,
    base: &Path,
) -> Result<PiAceCoding, CliError> {
    match reference {
        None => dpia::DpiaParams::default()
            .coding(graph)
            .map_err(|e| CliError::input(e.to_string())),
        Some(r) => Ok(CodewordFile::load(&base.join(r))?.pi_ace_coding(graph)?),
    }
}
