//! Runs many scenarios on a worker pool and aggregates their summaries.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::CliError;
use crate::run::{run_scenario, RunSummary};
use crate::scenario::Scenario;

/// Scenario files matching `pattern`, sorted by file name then path.
pub fn expand(pattern: &str) -> Result<Vec<PathBuf>, CliError> {
    let paths =
        glob::glob(pattern).map_err(|e| CliError::input(format!("bad glob '{pattern}': {e}")))?;
    let mut out = Vec::new();
    for p in paths {
        let p = p.map_err(|e| CliError::input(e.to_string()))?;
        if p.is_file() {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(CliError::input(format!("no scenario matches '{pattern}'")));
    }
    out.sort_by(|a, b| a.file_name().cmp(&b.file_name()).then_with(|| a.cmp(b)));
    Ok(out)
}

fn run_one(path: &Path, output_dir: &Path) -> RunSummary {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Scenario::load(path)
        .and_then(|s| run_scenario(&s, output_dir))
        .unwrap_or_else(|e| RunSummary::failed(&name, &e))
}

/// One summary per path, in input order. Failures become `error` rows.
pub fn run_batch(
    paths: &[PathBuf],
    output_dir: &Path,
    jobs: usize,
) -> Result<Vec<RunSummary>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::domain(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| paths.par_iter().map(|p| run_one(p, output_dir)).collect()))
}

pub fn write_table<W: std::io::Write>(rows: &[RunSummary], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
