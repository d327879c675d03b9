//! Executes one scenario and writes its CSV.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use sbdc_core::coding::DecodingFunction;
use sbdc_core::dpia;
use sbdc_core::graph::WeightedGraph;
use sbdc_core::margins;
use sbdc_core::sim::{
    consensus_check, simulate_ct_sbdc, simulate_dt_sbdc, simulate_opinion, simulate_pi_ace,
    ConsensusCheck, InputSignal, OpinionConfig, RunStatus, SimConfig, Trajectory,
};

use crate::error::CliError;
use crate::refs;
use crate::scenario::{EpsilonSpec, Params, Scenario};

/// One-line result of a run. Also the row type of batch tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub protocol: String,
    pub graph: String,
    pub seed: Option<u64>,
    pub status: String,
    /// Time of divergence or of the first alert.
    pub event_t: Option<f64>,
    pub classification: Option<String>,
    pub final_disagreement: Option<f64>,
    pub lambda2: Option<f64>,
    pub median_estimate: Option<f64>,
    pub r: Option<f64>,
    pub communities: Option<usize>,
    pub rows: Option<usize>,
    pub output: Option<String>,
    pub error: Option<String>,
}

impl RunSummary {
    fn new(scenario: &Scenario) -> Self {
        RunSummary {
            scenario: scenario.name.clone(),
            protocol: scenario.protocol.to_string(),
            graph: scenario.graph.clone(),
            seed: scenario.seed(),
            status: String::new(),
            event_t: None,
            classification: None,
            final_disagreement: None,
            lambda2: None,
            median_estimate: None,
            r: None,
            communities: None,
            rows: None,
            output: None,
            error: None,
        }
    }

    /// Row for a scenario that failed before producing a result.
    pub fn failed(name: &str, error: &CliError) -> Self {
        RunSummary {
            scenario: name.to_string(),
            protocol: String::new(),
            graph: String::new(),
            seed: None,
            status: "error".into(),
            event_t: None,
            classification: None,
            final_disagreement: None,
            lambda2: None,
            median_estimate: None,
            r: None,
            communities: None,
            rows: None,
            output: None,
            error: Some(error.to_string()),
        }
    }

    fn record(&mut self, traj: &Trajectory, check: Option<ConsensusCheck>) {
        let (status, t, alert) = match &traj.status {
            RunStatus::Completed => ("completed", None, None),
            RunStatus::Diverged { t } => ("diverged", Some(*t), None),
            RunStatus::Alert { t, message } => ("alert", Some(*t), Some(message.clone())),
        };
        self.status = status.into();
        self.event_t = t;
        self.error = alert;
        if let Some(c) = check {
            self.classification = Some(c.classification.to_string());
            self.final_disagreement = Some(c.final_disagreement);
        }
        self.rows = Some(traj.len());
    }

    pub fn line(&self) -> String {
        let mut parts = vec![format!("{} [{}]", self.scenario, self.protocol)];
        if let Some(c) = &self.classification {
            parts.push(format!("classification={c}"));
        }
        parts.push(format!("status={}", self.status));
        if let Some(t) = self.event_t {
            parts.push(format!("t={t}"));
        }
        let num = |k: &str, v: Option<f64>| v.map(|v| format!("{k}={v:.6e}"));
        parts.extend(num("final_disagreement", self.final_disagreement));
        parts.extend(num("lambda2", self.lambda2));
        parts.extend(num("median_estimate", self.median_estimate));
        parts.extend(num("r", self.r));
        if let Some(c) = self.communities {
            parts.push(format!("communities={c}"));
        }
        if let Some(e) = &self.error {
            parts.push(format!("message=\"{e}\""));
        }
        if let Some(o) = &self.output {
            parts.push(format!("output={o}"));
        }
        parts.join(" ")
    }
}

fn sim_err(e: impl ToString) -> CliError {
    CliError::input(e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::input(format!("writing {}: {e}", path.display()))
}

fn epsilon(spec: &EpsilonSpec, g: &WeightedGraph) -> Result<f64, CliError> {
    match spec {
        EpsilonSpec::Value(v) => Ok(*v),
        EpsilonSpec::Named(s) if s == "star-global" => Ok(margins::dt_epsilon_star_global(g)),
        EpsilonSpec::Named(s) => {
            let parts: Vec<&str> = s.split(':').collect();
            match parts.as_slice() {
                ["star", u, v] => {
                    let node = |p: &str| {
                        p.parse::<usize>()
                            .map_err(|_| CliError::input(format!("bad node '{p}' in '{s}'")))
                    };
                    Ok(margins::dt_epsilon_star(g, node(u)?, node(v)?)?)
                }
                _ => Err(CliError::input(format!(
                    "epsilon must be a number, \"star-global\" or \"star:U:V\", got '{s}'"
                ))),
            }
        }
    }
}

/// Runs `scenario`, writing its CSV under `output_dir` unless the output
/// path is absolute.
pub fn run_scenario(scenario: &Scenario, output_dir: &Path) -> Result<RunSummary, CliError> {
    let out: PathBuf = output_dir.join(&scenario.output);
    let base = scenario.base.as_path();
    let graph = refs::resolve_graph(&scenario.graph, base)?;
    let n = graph.node_count();
    let mut summary = RunSummary::new(scenario);
    let cw = scenario.codewords.as_deref();
    match &scenario.params {
        Params::Ct(p) => {
            let table = refs::resolve_table(cw, &graph, base)?;
            let cfg = SimConfig {
                dt: p.dt,
                horizon: p.horizon,
                dim: p.dim,
                record_every: p.record_every,
            };
            let x0 = p.init.resolve(n * p.dim)?;
            let traj =
                simulate_ct_sbdc(&graph, &table, &scenario.attack, &x0, &cfg).map_err(sim_err)?;
            summary.record(&traj, Some(consensus_check(&traj, p.tol)));
            traj.write_csv(create(&out)?, &[]).map_err(csv_err(&out))?;
        }
        Params::Dt(p) => {
            let table = refs::resolve_table(cw, &graph, base)?;
            let eps = epsilon(&p.epsilon, &graph)?;
            let x0 = p.init.resolve(n)?;
            let traj = simulate_dt_sbdc(&graph, &table, &scenario.attack, eps, &x0, p.steps)
                .map_err(|e| CliError::domain(e.to_string()))?;
            summary.record(&traj, Some(consensus_check(&traj, p.tol)));
            traj.write_csv(create(&out)?, &[]).map_err(csv_err(&out))?;
        }
        Params::PiAce(p) => {
            let coding = refs::resolve_pi_ace(cw, &graph, base)?;
            let input = match &p.amplitude {
                None => InputSignal::Constant(p.c.clone()),
                Some(a) => InputSignal::Sinusoid {
                    offset: p.c.clone(),
                    amplitude: a.clone(),
                    omega: p.omega,
                    phase: p.phase,
                },
            };
            let zeros = vec![0.0; n];
            let y0 = p.y0.clone().unwrap_or_else(|| zeros.clone());
            let q0 = p.q0.clone().unwrap_or(zeros);
            let cfg = SimConfig {
                dt: p.dt,
                horizon: p.horizon,
                dim: 1,
                record_every: p.record_every,
            };
            let traj = simulate_pi_ace(&graph, &coding, &scenario.attack, &input, &y0, &q0, &cfg)
                .map_err(sim_err)?;
            summary.record(&traj, Some(consensus_check(&traj, p.tol)));
            traj.write_csv(create(&out)?, &[]).map_err(csv_err(&out))?;
        }
        Params::Dpia(p) => {
            let params = p.params()?;
            let cfg = SimConfig {
                dt: p.dt,
                horizon: p.horizon,
                dim: 1,
                record_every: p.record_every,
            };
            let res = dpia::run_dpia(&graph, &params, &scenario.attack, &cfg, p.zeta_seed)
                .map_err(sim_err)?;
            summary.record(&res.trajectory, None);
            summary.classification = Some(res.classification.to_string());
            summary.final_disagreement = res.trajectory.disagreement.last().copied();
            summary.lambda2 = Some(res.lambda2_true);
            summary.median_estimate = Some(res.median_estimate());
            summary.r = res.rate.map(|r| r.r);
            let last = res.error.len().saturating_sub(1);
            let lambda: Vec<f64> = (0..res.error.len())
                .filter(|k| k % res.record_every == 0 || *k == last)
                .map(|k| res.error[k])
                .collect();
            res.trajectory
                .write_csv(create(&out)?, &[("Lambda", &lambda)])
                .map_err(csv_err(&out))?;
        }
        Params::Opinion(p) => {
            let table = refs::resolve_table(cw, &graph, base)?;
            let cfg = OpinionConfig {
                gamma: p.gamma,
                upsilon: p.upsilon,
                steps: p.steps,
                agreement_tol: p.agreement_tol,
            };
            let x0 = p.init.resolve(n)?;
            let run =
                simulate_opinion(&graph, &table, &scenario.attack, &cfg, &x0).map_err(sim_err)?;
            summary.record(
                &run.trajectory,
                Some(consensus_check(&run.trajectory, p.agreement_tol)),
            );
            summary.communities = Some(run.final_communities().len());
            run.write_csv(create(&out)?).map_err(csv_err(&out))?;
        }
    }
    summary.output = Some(out.display().to_string());
    Ok(summary)
}

/// Margin report for one edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginSummary {
    pub u: usize,
    pub v: usize,
    pub decoder: String,
    pub effective_resistance: f64,
    pub weight_margin: f64,
    pub lipschitz: f64,
    pub rho: f64,
    pub epsilon: Option<f64>,
    pub xi: Option<f64>,
    pub epsilon_star: Option<f64>,
    pub epsilon_star_global: Option<f64>,
    pub step_gain_infeasible: Option<bool>,
}

pub fn margins(
    graph: &WeightedGraph,
    u: usize,
    v: usize,
    decoder: &DecodingFunction,
    eps: Option<f64>,
) -> Result<MarginSummary, CliError> {
    let rep = margins::codeword_margin_for(graph, decoder, u, v)?;
    let mut out = MarginSummary {
        u,
        v,
        decoder: decoder.to_string(),
        effective_resistance: rep.effective_resistance,
        weight_margin: 1.0 / rep.effective_resistance,
        lipschitz: rep.lipschitz,
        rho: rep.codeword_margin,
        epsilon: None,
        xi: None,
        epsilon_star: None,
        epsilon_star_global: None,
        step_gain_infeasible: None,
    };
    if let Some(eps) = eps {
        let dt = margins::dt_margin_with_lipschitz(graph, decoder.lipschitz(), u, v, eps)?;
        out.epsilon = Some(eps);
        out.xi = Some(dt.xi);
        out.epsilon_star = Some(dt.epsilon_star);
        out.epsilon_star_global = Some(dt.epsilon_star_global);
        out.step_gain_infeasible = Some(dt.step_gain_infeasible);
    }
    Ok(out)
}

impl MarginSummary {
    pub fn text(&self) -> String {
        let mut s = format!(
            "edge         ({}, {})\ndecoder      {}\nR            {:.6}\n1/R          {:.6}\nK            {:.6}\nrho          {:.6}\n",
            self.u, self.v, self.decoder, self.effective_resistance, self.weight_margin, self.lipschitz, self.rho
        );
        if let (Some(eps), Some(xi), Some(es), Some(eg)) = (
            self.epsilon,
            self.xi,
            self.epsilon_star,
            self.epsilon_star_global,
        ) {
            s.push_str(&format!(
                "epsilon      {eps:.6}\nxi           {xi:.6}\neps*         {es:.6}\neps*-global  {eg:.6}\n"
            ));
            if self.step_gain_infeasible == Some(true) {
                s.push_str(
                    "note         1/epsilon <= max weighted degree: no deviation is certified\n",
                );
            }
        }
        s
    }
}
