use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sbdc_cli::{batch, refs, CliError, Scenario, OUTPUT_DIR_ENV};
use sbdc_core::coding::DecodingFunction;

#[derive(Parser)]
#[command(
    name = "sbdc",
    version,
    about = "Consensus robustness margins and attack simulations"
)]
struct Cli {
    /// Directory for relative output paths.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV, default_value = ".")]
    output_dir: PathBuf,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Robustness margins of one edge.
    Margins {
        /// Graph file, `bundled:NAME` or `random:SEED`.
        #[arg(long)]
        graph: String,
        #[arg(long, num_args = 2, value_names = ["U", "V"])]
        edge: Vec<usize>,
        /// `linear:B[:A]` or `log:BETA`.
        #[arg(long)]
        decoder: String,
        /// Discrete-time step gain.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Run one scenario file.
    Run { scenario: PathBuf },
    /// Run every scenario matching a glob.
    Batch {
        pattern: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Aggregate table path, relative to the output directory.
        #[arg(long, default_value = "batch_summary.csv")]
        out: PathBuf,
    },
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string(v).map_err(|e| CliError::domain(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Margins {
            graph,
            edge,
            decoder,
            epsilon,
        } => {
            let g = refs::resolve_graph(&graph, std::path::Path::new(""))?;
            let d: DecodingFunction = decoder
                .parse()
                .map_err(|e: sbdc_core::CodingError| CliError::input(e.to_string()))?;
            let report = sbdc_cli::margins(&g, edge[0], edge[1], &d, epsilon)?;
            if cli.json {
                println!("{}", json(&report)?);
            } else {
                print!("{}", report.text());
            }
        }
        Command::Run { scenario } => {
            let s = Scenario::load(&scenario)?;
            let summary = sbdc_cli::run_scenario(&s, &cli.output_dir)?;
            if cli.json {
                println!("{}", json(&summary)?);
            } else {
                println!("{}", summary.line());
            }
        }
        Command::Batch { pattern, jobs, out } => {
            let paths = batch::expand(&pattern)?;
            let rows = batch::run_batch(&paths, &cli.output_dir, jobs)?;
            let out = cli.output_dir.join(out);
            let file = File::create(&out)
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", out.display())))?;
            batch::write_table(&rows, file).map_err(|e| CliError::input(e.to_string()))?;
            let failed = rows.iter().filter(|r| r.status == "error").count();
            for r in rows.iter().filter(|r| r.status == "error") {
                eprintln!("{}: {}", r.scenario, r.error.as_deref().unwrap_or(""));
            }
            println!(
                "{} scenarios, {failed} failed, table {}",
                rows.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
