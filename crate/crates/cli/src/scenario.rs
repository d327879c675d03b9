//! Scenario files.
//!
//! ```toml
//! schema_version = 1
//! protocol = "ct-sbdc"
//! graph = "bundled:five_node"
//! codewords = "bundled:five_node:3"
//! output = "ct_beta3.csv"
//!
//! [[attack]]
//! target = "edge"
//! edge = [3, 4]
//! deviation = { kind = "constant", value = -4.7 }
//!
//! [params]
//! horizon = 20.0
//! x0_seed = 6
//! ```
//!
//! Relative file references resolve against the scenario's directory.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use sbdc_core::coding::{DecodingFunction, TableMode};
use sbdc_core::graph::Edge;
use sbdc_core::io::{self, SCHEMA_VERSION};
use sbdc_core::sim::{AttackSpec, AttackTarget, Deviation, Gain, DEFAULT_CONSENSUS_TOL};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    CtSbdc,
    DtSbdc,
    PiAce,
    Dpia,
    Opinion,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::CtSbdc => "ct-sbdc",
            Protocol::DtSbdc => "dt-sbdc",
            Protocol::PiAce => "pi-ace",
            Protocol::Dpia => "dpia",
            Protocol::Opinion => "opinion",
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    name: Option<String>,
    protocol: Protocol,
    graph: String,
    codewords: Option<String>,
    output: Option<String>,
    #[serde(default)]
    attack: Vec<AttackEntry>,
    #[serde(default)]
    params: toml::Table,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum TargetName {
    Edge,
    Alpha,
    Kp,
    Ki,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackEntry {
    target: TargetName,
    edge: Option<[usize; 2]>,
    deviation: DeviationSpec,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum DeviationSpec {
    Constant {
        value: f64,
    },
    Step {
        at: f64,
        value: f64,
    },
    Sine {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl From<DeviationSpec> for Deviation {
    fn from(d: DeviationSpec) -> Self {
        match d {
            DeviationSpec::Constant { value } => Deviation::Constant(value),
            DeviationSpec::Step { at, value } => Deviation::Step { at, value },
            DeviationSpec::Sine {
                offset,
                amplitude,
                omega,
                phase,
            } => Deviation::Sine {
                offset,
                amplitude,
                omega,
                phase,
            },
        }
    }
}

/// Initial state given directly or drawn uniformly from a seeded ChaCha8
/// stream.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x0: Option<Vec<f64>>,
    pub x0_seed: Option<u64>,
    #[serde(default = "default_range")]
    pub x0_range: [f64; 2],
}

fn default_range() -> [f64; 2] {
    [-5.0, 5.0]
}

impl InitialState {
    pub fn resolve(&self, len: usize) -> Result<Vec<f64>, CliError> {
        match (&self.x0, self.x0_seed) {
            (Some(x), None) => {
                if x.len() != len {
                    return Err(CliError::input(format!(
                        "x0 has {} entries, expected {len}",
                        x.len()
                    )));
                }
                Ok(x.clone())
            }
            (None, Some(seed)) => {
                let [lo, hi] = self.x0_range;
                if !(lo < hi) {
                    return Err(CliError::input(format!("empty x0_range [{lo}, {hi}]")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok((0..len).map(|_| rng.random_range(lo..hi)).collect())
            }
            _ => Err(CliError::input("give exactly one of x0 or x0_seed")),
        }
    }
}

fn default_dt() -> f64 {
    sbdc_core::sim::DEFAULT_DT
}
fn default_horizon() -> f64 {
    20.0
}
fn default_one() -> usize {
    1
}
fn default_tol() -> f64 {
    DEFAULT_CONSENSUS_TOL
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtParams {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_one")]
    pub record_every: usize,
    #[serde(default = "default_one")]
    pub dim: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(flatten)]
    pub init: InitialState,
}

/// `epsilon = 0.05`, `"star-global"` or `"star:U:V"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtParams {
    pub epsilon: EpsilonSpec,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(flatten)]
    pub init: InitialState,
}

fn default_steps() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiAceRunParams {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_one")]
    pub record_every: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Constant input, or the offset of a sinusoid when `amplitude` is set.
    pub c: Vec<f64>,
    pub amplitude: Option<Vec<f64>>,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
    pub y0: Option<Vec<f64>>,
    pub q0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Broadcast,
    PerEdge,
}

impl From<ModeName> for TableMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Broadcast => TableMode::Broadcast,
            ModeName::PerEdge => TableMode::PerEdge,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpiaRunParams {
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub alpha: Option<f64>,
    pub kp: Option<f64>,
    pub ki: Option<f64>,
    /// Decoder specs for α, K_P, K_I, e.g. `["linear:5", "linear:2", "linear:0.1"]`.
    pub decoders: Option<[String; 3]>,
    pub mode: Option<ModeName>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_dpia_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dpia_record")]
    pub record_every: usize,
    #[serde(default)]
    pub zeta_seed: u64,
}

fn default_dpia_horizon() -> f64 {
    100.0
}
fn default_dpia_record() -> usize {
    1000
}

impl DpiaRunParams {
    pub fn params(&self) -> Result<sbdc_core::dpia::DpiaParams, CliError> {
        let mut p = sbdc_core::dpia::DpiaParams::default();
        p.k1 = self.k1.unwrap_or(p.k1);
        p.k2 = self.k2.unwrap_or(p.k2);
        p.k3 = self.k3.unwrap_or(p.k3);
        p.estimator.alpha = self.alpha.unwrap_or(p.estimator.alpha);
        p.estimator.kp = self.kp.unwrap_or(p.estimator.kp);
        p.estimator.ki = self.ki.unwrap_or(p.estimator.ki);
        p.t0 = self.t0.unwrap_or(p.t0);
        p.t1 = self.t1.unwrap_or(p.t1);
        if let Some(mode) = self.mode {
            p.mode = mode.into();
        }
        if let Some(specs) = &self.decoders {
            let mut out = Vec::with_capacity(3);
            for s in specs {
                out.push(
                    s.parse::<DecodingFunction>()
                        .map_err(|e| CliError::input(e.to_string()))?,
                );
            }
            p.decoders = out.try_into().expect("three decoders");
        }
        p.validate().map_err(|e| CliError::input(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpinionRunParams {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_upsilon")]
    pub upsilon: f64,
    #[serde(default = "default_opinion_steps")]
    pub steps: usize,
    #[serde(default = "default_agreement")]
    pub agreement_tol: f64,
    #[serde(flatten)]
    pub init: InitialState,
}

fn default_gamma() -> f64 {
    sbdc_core::bundled::OPINION_GAMMA
}
fn default_upsilon() -> f64 {
    sbdc_core::bundled::OPINION_UPSILON
}
fn default_opinion_steps() -> usize {
    300
}
fn default_agreement() -> f64 {
    sbdc_core::sim::DEFAULT_AGREEMENT_TOL
}

#[derive(Debug, Clone)]
pub enum Params {
    Ct(CtParams),
    Dt(DtParams),
    PiAce(PiAceRunParams),
    Dpia(DpiaRunParams),
    Opinion(OpinionRunParams),
}

/// A parsed scenario. File references are still unresolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub protocol: Protocol,
    pub graph: String,
    pub codewords: Option<String>,
    pub output: PathBuf,
    pub attack: AttackSpec,
    pub params: Params,
    /// Directory that relative references resolve against.
    pub base: PathBuf,
}

fn params_from<T: DeserializeOwned>(table: toml::Table) -> Result<T, CliError> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::input(format!("[params]: {}", e.message())))
}

fn attack_from(entries: &[AttackEntry]) -> Result<AttackSpec, CliError> {
    let mut spec = AttackSpec::none();
    for (k, entry) in entries.iter().enumerate() {
        let edge = entry.edge.map(|[u, v]| Edge::new(u, v));
        let target = match (entry.target, edge) {
            (TargetName::Edge, Some(e)) => AttackTarget::Edge(e),
            (TargetName::Edge, None) => {
                return Err(CliError::input(format!(
                    "attack {}: edge target needs `edge`",
                    k + 1
                )))
            }
            (TargetName::Alpha, None) => AttackTarget::Param(Gain::Alpha),
            (TargetName::Alpha, Some(_)) => {
                return Err(CliError::input(format!(
                    "attack {}: alpha is broadcast and takes no edge",
                    k + 1
                )))
            }
            (TargetName::Kp, None) => AttackTarget::Param(Gain::Kp),
            (TargetName::Kp, Some(e)) => AttackTarget::ParamEdge(Gain::Kp, e),
            (TargetName::Ki, None) => AttackTarget::Param(Gain::Ki),
            (TargetName::Ki, Some(e)) => AttackTarget::ParamEdge(Gain::Ki, e),
        };
        spec = spec
            .with(target, entry.deviation.into())
            .map_err(|e| CliError::input(format!("attack {}: {e}", k + 1)))?;
    }
    Ok(spec)
}

impl Scenario {
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| CliError::from(io::toml_error(text, e)))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::input(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                file.schema_version
            )));
        }
        let name = match file.name {
            Some(n) => n,
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into()),
        };
        let params = match file.protocol {
            Protocol::CtSbdc => Params::Ct(params_from(file.params)?),
            Protocol::DtSbdc => Params::Dt(params_from(file.params)?),
            Protocol::PiAce => Params::PiAce(params_from(file.params)?),
            Protocol::Dpia => Params::Dpia(params_from(file.params)?),
            Protocol::Opinion => Params::Opinion(params_from(file.params)?),
        };
        if file.protocol == Protocol::Dpia && file.codewords.is_some() {
            return Err(CliError::input(
                "dpia encodes its gains from [params]; drop `codewords`",
            ));
        }
        let attack = attack_from(&file.attack)?;
        let output = PathBuf::from(file.output.unwrap_or_else(|| format!("{name}.csv")));
        Ok(Scenario {
            name,
            protocol: file.protocol,
            graph: file.graph,
            codewords: file.codewords,
            output,
            attack,
            params,
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = io::read_file(path)?;
        Self::parse(&text, path).map_err(|e| match e {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Seed that identifies the run in batch tables.
    pub fn seed(&self) -> Option<u64> {
        if let Some(s) = crate::refs::random_seed(&self.graph) {
            return Some(s);
        }
        match &self.params {
            Params::Ct(p) => p.init.x0_seed,
            Params::Dt(p) => p.init.x0_seed,
            Params::Opinion(p) => p.init.x0_seed,
            Params::Dpia(p) => Some(p.zeta_seed),
            Params::PiAce(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario, CliError> {
        Scenario::parse(text, Path::new("dir/example.toml"))
    }

    #[test]
    fn minimal_ct() {
        let s = parse(
            "schema_version = 1\nprotocol = \"ct-sbdc\"\ngraph = \"bundled:five_node\"\n[params]\nx0_seed = 6\n",
        )
        .unwrap();
        assert_eq!(s.name, "example");
        assert_eq!(s.output, PathBuf::from("example.csv"));
        assert_eq!(s.base, PathBuf::from("dir"));
        assert!(s.attack.is_empty());
        let Params::Ct(p) = &s.params else { panic!() };
        assert_eq!(p.horizon, 20.0);
        assert_eq!(p.init.resolve(5).unwrap().len(), 5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let top = "schema_version = 1\nprotocol = \"ct-sbdc\"\ngraph = \"g\"\ncolour = 1\n";
        assert!(matches!(parse(top), Err(CliError::Input(m)) if m.contains("line 4")));
        let params = "schema_version = 1\nprotocol = \"opinion\"\ngraph = \"g\"\n[params]\nx0_seed = 1\nsteps = 3\nhorizon = 2\n";
        assert!(matches!(parse(params), Err(CliError::Input(m)) if m.contains("horizon")));
        let attack = "schema_version = 1\nprotocol = \"ct-sbdc\"\ngraph = \"g\"\n[[attack]]\ntarget = \"edge\"\nedge = [1, 2]\ndeviation = { kind = \"constant\", valu = 1 }\n[params]\nx0_seed = 1\n";
        assert!(parse(attack).is_err());
    }

    #[test]
    fn attack_targets() {
        let text = "schema_version = 1\nprotocol = \"dpia\"\ngraph = \"random:3\"\n\
            [[attack]]\ntarget = \"kp\"\nedge = [1, 2]\ndeviation = { kind = \"step\", at = 1.0, value = -2.0 }\n\
            [[attack]]\ntarget = \"alpha\"\ndeviation = { kind = \"sine\", amplitude = 1.0, omega = 2.0 }\n";
        let s = parse(text).unwrap();
        assert_eq!(s.attack.targets().len(), 2);
        assert_eq!(s.seed(), Some(3));
        let bad = "schema_version = 1\nprotocol = \"ct-sbdc\"\ngraph = \"g\"\n[[attack]]\ntarget = \"edge\"\ndeviation = { kind = \"constant\", value = 1 }\n[params]\nx0_seed = 1\n";
        assert!(matches!(parse(bad), Err(CliError::Input(m)) if m.contains("needs `edge`")));
    }

    #[test]
    fn initial_state_choices() {
        let both = InitialState {
            x0: Some(vec![1.0]),
            x0_seed: Some(1),
            x0_range: default_range(),
        };
        assert!(both.resolve(1).is_err());
        let seeded = InitialState {
            x0: None,
            x0_seed: Some(9),
            x0_range: [0.0, 1.0],
        };
        let a = seeded.resolve(4).unwrap();
        assert_eq!(a, seeded.resolve(4).unwrap());
        assert!(a.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn schema_version_checked() {
        let text = "schema_version = 2\nprotocol = \"ct-sbdc\"\ngraph = \"g\"\n";
        assert!(matches!(parse(text), Err(CliError::Input(m)) if m.contains("schema_version")));
    }
}
