//! Objective coding: decoders that turn received subcodewords into edge
//! weights, and per-edge codeword tables.
//!
//! Every built-in decoder is non-constant, concave and Lipschitz on the
//! whole real line. Custom decoders may declare a bounded domain; decoding
//! outside it raises [`CodingError::OutOfDomain`], the alert signal.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::CodingError;
use crate::graph::{Edge, WeightedGraph};

/// Grid density used when no explicit sample grid is given.
pub const DEFAULT_GRID_POINTS: usize = 1000;

const CONCAVITY_SLACK: f64 = 1e-9;
const SLOPE_SLACK: f64 = 1e-6;

type DecoderFn = dyn Fn(f64) -> f64 + Send + Sync;

/// User-supplied decoder with a declared Lipschitz bound and domain.
#[derive(Clone)]
pub struct CustomDecoder {
    name: String,
    func: Arc<DecoderFn>,
    lipschitz: f64,
    domain: (f64, f64),
}

impl fmt::Debug for CustomDecoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDecoder")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("domain", &self.domain)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum DecodingFunction {
    /// `p(η) = bη + a`.
    Linear {
        a: f64,
        b: f64,
    },
    /// `log_β(1 + η)` for `η ≥ 0`, `η / ln β` below zero.
    LogLinear {
        beta: f64,
    },
    Custom(CustomDecoder),
}

impl DecodingFunction {
    pub fn linear(b: f64, a: f64) -> Result<Self, CodingError> {
        if b == 0.0 || !b.is_finite() || !a.is_finite() {
            return Err(CodingError::ZeroSlope);
        }
        Ok(DecodingFunction::Linear { a, b })
    }

    pub fn log_linear(beta: f64) -> Result<Self, CodingError> {
        if !(beta > 1.0) || !beta.is_finite() {
            return Err(CodingError::InvalidBase(beta));
        }
        Ok(DecodingFunction::LogLinear { beta })
    }

    pub fn custom<F>(
        name: impl Into<String>,
        func: F,
        lipschitz: f64,
        domain: (f64, f64),
    ) -> Result<Self, CodingError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz > 0.0) {
            return Err(CodingError::InvalidDecoder(format!(
                "declared Lipschitz bound {lipschitz} must be positive"
            )));
        }
        if !(domain.0 < domain.1) {
            return Err(CodingError::InvalidDecoder(format!(
                "empty domain [{}, {}]",
                domain.0, domain.1
            )));
        }
        Ok(DecodingFunction::Custom(CustomDecoder {
            name: name.into(),
            func: Arc::new(func),
            lipschitz,
            domain,
        }))
    }

    /// The same map accepted only on `[lo, hi]`.
    pub fn restricted(&self, lo: f64, hi: f64) -> Result<Self, CodingError> {
        let name = format!("{self}@[{lo},{hi}]");
        let k = self.lipschitz();
        let inner = self.clone();
        DecodingFunction::custom(name, move |eta| inner.eval(eta), k, (lo, hi))
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            DecodingFunction::Custom(c) => c.domain,
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Bare evaluation without the domain check.
    fn eval(&self, eta: f64) -> f64 {
        match self {
            DecodingFunction::Linear { a, b } => b * eta + a,
            DecodingFunction::LogLinear { beta } => {
                if eta >= 0.0 {
                    (1.0 + eta).ln() / beta.ln()
                } else {
                    eta / beta.ln()
                }
            }
            DecodingFunction::Custom(c) => (c.func)(eta),
        }
    }

    pub fn decode(&self, eta: f64) -> Result<f64, CodingError> {
        let (lo, hi) = self.domain();
        if !(eta >= lo && eta <= hi) {
            return Err(CodingError::OutOfDomain { value: eta, lo, hi });
        }
        Ok(self.eval(eta))
    }

    /// Global bound K on `|p'|`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            DecodingFunction::Linear { b, .. } => b.abs(),
            DecodingFunction::LogLinear { beta } => 1.0 / beta.ln(),
            DecodingFunction::Custom(c) => c.lipschitz,
        }
    }

    /// Subcodeword that decodes to `w`.
    pub fn encode(&self, w: f64) -> Result<f64, CodingError> {
        if !w.is_finite() {
            return Err(CodingError::NotInImage(w));
        }
        match self {
            DecodingFunction::Linear { a, b } => Ok((w - a) / b),
            DecodingFunction::LogLinear { beta } => {
                if w >= 0.0 {
                    Ok(beta.powf(w) - 1.0)
                } else {
                    Ok(w * beta.ln())
                }
            }
            DecodingFunction::Custom(c) => invert_by_bisection(self, c.domain, w),
        }
    }

    /// Sampled check of non-constancy, midpoint concavity and the declared
    /// slope bound over `grid` (sorted ascending by the caller or not; it is
    /// sorted here).
    pub fn verify_characterization(&self, grid: &[f64]) -> CharacterizationReport {
        let mut pts: Vec<f64> = grid.iter().copied().filter(|x| x.is_finite()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let vals: Vec<f64> = pts.iter().map(|&x| self.eval(x)).collect();
        let k = self.lipschitz();

        let mut max_slope: f64 = 0.0;
        for i in 1..pts.len() {
            let s = ((vals[i] - vals[i - 1]) / (pts[i] - pts[i - 1])).abs();
            max_slope = max_slope.max(s);
        }
        let mut worst_gap = f64::INFINITY;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let mid = self.eval(0.5 * (pts[i] + pts[j]));
                let gap = mid - 0.5 * (vals[i] + vals[j]);
                worst_gap = worst_gap.min(gap);
            }
        }
        let first = vals.first().copied().unwrap_or(0.0);
        CharacterizationReport {
            samples: pts.len(),
            non_constant: vals.iter().any(|&v| v != first),
            concave: worst_gap >= -CONCAVITY_SLACK,
            lipschitz: max_slope <= k + SLOPE_SLACK,
            max_sampled_slope: max_slope,
            worst_concavity_gap: worst_gap,
            declared_lipschitz: k,
        }
    }
}

fn invert_by_bisection(
    f: &DecodingFunction,
    domain: (f64, f64),
    w: f64,
) -> Result<f64, CodingError> {
    let (mut lo, mut hi) = domain;
    if !lo.is_finite() || !hi.is_finite() {
        return Err(CodingError::InvalidDecoder(
            "custom decoders on unbounded domains cannot be inverted".into(),
        ));
    }
    let (flo, fhi) = (f.eval(lo) - w, f.eval(hi) - w);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CodingError::NotInImage(w));
    }
    let increasing = fhi > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f.eval(mid) - w;
        if (fm < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `n` evenly spaced points over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationReport {
    pub samples: usize,
    pub non_constant: bool,
    pub concave: bool,
    pub lipschitz: bool,
    pub max_sampled_slope: f64,
    /// Minimum of `p(mid) − mean(p(η₁), p(η₂))` over sampled pairs.
    pub worst_concavity_gap: f64,
    pub declared_lipschitz: f64,
}

impl CharacterizationReport {
    pub fn passed(&self) -> bool {
        self.non_constant && self.concave && self.lipschitz
    }
}

impl fmt::Display for DecodingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodingFunction::Linear { a, b } if *a == 0.0 => write!(f, "linear:{b}"),
            DecodingFunction::Linear { a, b } => write!(f, "linear:{b}:{a}"),
            DecodingFunction::LogLinear { beta } => write!(f, "log:{beta}"),
            DecodingFunction::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

/// Parses `linear:B`, `linear:B:A` or `log:BETA`.
impl FromStr for DecodingFunction {
    type Err = CodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CodingError::InvalidDecoder(format!("bad number '{p}' in '{s}'")))
        };
        match parts.as_slice() {
            ["linear", b] => DecodingFunction::linear(num(b)?, 0.0),
            ["linear", b, a] => DecodingFunction::linear(num(b)?, num(a)?),
            ["log", beta] => DecodingFunction::log_linear(num(beta)?),
            _ => Err(CodingError::InvalidDecoder(format!(
                "expected linear:B[:A] or log:BETA, got '{s}'"
            ))),
        }
    }
}

/// Serializable description of a built-in decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecoderSpec {
    Linear {
        b: f64,
        #[serde(default)]
        a: f64,
        /// Accepted codeword range; received values outside it raise an alert.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
    },
    #[serde(alias = "log-linear")]
    Log {
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
    },
}

impl DecoderSpec {
    pub fn build(&self) -> Result<DecodingFunction, CodingError> {
        let (base, domain) = match *self {
            DecoderSpec::Linear { b, a, domain } => (DecodingFunction::linear(b, a)?, domain),
            DecoderSpec::Log { beta, domain } => (DecodingFunction::log_linear(beta)?, domain),
        };
        match domain {
            None => Ok(base),
            Some([lo, hi]) => base.restricted(lo, hi),
        }
    }
}

/// A subcodeword and the decoder that unveils it.
#[derive(Debug, Clone)]
pub struct Codeword {
    pub theta: f64,
    pub decoder: DecodingFunction,
}

impl Codeword {
    pub fn new(theta: f64, decoder: DecodingFunction) -> Self {
        Codeword { theta, decoder }
    }

    /// Codeword that decodes to `weight`.
    pub fn for_weight(weight: f64, decoder: DecodingFunction) -> Result<Self, CodingError> {
        let theta = decoder.encode(weight)?;
        Ok(Codeword { theta, decoder })
    }

    pub fn nominal(&self) -> Result<f64, CodingError> {
        self.decoder.decode(self.theta)
    }

    /// `p(θ + δ)`.
    pub fn decode_with(&self, deviation: f64) -> Result<f64, CodingError> {
        self.decoder.decode(self.theta + deviation)
    }

    pub fn lipschitz(&self) -> f64 {
        self.decoder.lipschitz()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMode {
    /// One subcodeword per edge.
    PerEdge,
    /// One subcodeword broadcast to and shared by every edge.
    Broadcast,
}

/// Codewords keyed by canonical edge, so `θ_ij = θ_ji` holds by
/// construction.
#[derive(Debug, Clone)]
pub struct CodewordTable {
    mode: TableMode,
    entries: BTreeMap<Edge, Codeword>,
}

impl CodewordTable {
    pub fn per_edge(entries: impl IntoIterator<Item = (Edge, Codeword)>) -> Self {
        CodewordTable {
            mode: TableMode::PerEdge,
            entries: entries.into_iter().collect(),
        }
    }

    pub fn broadcast(edges: &[Edge], codeword: Codeword) -> Self {
        CodewordTable {
            mode: TableMode::Broadcast,
            entries: edges.iter().map(|&e| (e, codeword.clone())).collect(),
        }
    }

    /// Encodes every nominal weight of `graph` with the decoder chosen per
    /// edge.
    pub fn encode_graph<F>(graph: &WeightedGraph, mut decoder_for: F) -> Result<Self, CodingError>
    where
        F: FnMut(Edge) -> DecodingFunction,
    {
        let mut entries = BTreeMap::new();
        for (&e, &w) in graph.edges().iter().zip(graph.weights()) {
            entries.insert(e, Codeword::for_weight(w, decoder_for(e))?);
        }
        Ok(CodewordTable {
            mode: TableMode::PerEdge,
            entries,
        })
    }

    /// Identity decoders: the subcodeword is the weight.
    pub fn identity(graph: &WeightedGraph) -> Self {
        CodewordTable::encode_graph(graph, |_| DecodingFunction::Linear { a: 0.0, b: 1.0 })
            .expect("identity decoder inverts every weight")
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn get(&self, edge: Edge) -> Option<&Codeword> {
        self.entries.get(&edge)
    }

    pub fn set(&mut self, edge: Edge, codeword: Codeword) {
        self.entries.insert(edge, codeword);
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Edge, &Codeword)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lipschitz(&self, edge: Edge) -> Result<f64, CodingError> {
        self.get(edge)
            .map(Codeword::lipschitz)
            .ok_or(CodingError::MissingEdge(edge))
    }

    /// Decoded nominal weights; every value must be strictly positive.
    pub fn nominal_weights(&self) -> Result<BTreeMap<Edge, f64>, CodingError> {
        let mut out = BTreeMap::new();
        for (&e, cw) in &self.entries {
            let w = cw.nominal()?;
            if !(w > 0.0) {
                return Err(CodingError::NonPositiveNominal(e, w));
            }
            out.insert(e, w);
        }
        Ok(out)
    }

    pub fn nominal_graph(&self, n: usize) -> Result<WeightedGraph, crate::error::MarginError> {
        let weights = self.nominal_weights()?;
        let edges: Vec<Edge> = weights.keys().copied().collect();
        let w: Vec<f64> = weights.values().copied().collect();
        Ok(WeightedGraph::build(n, &edges, &w)?)
    }

    /// Codewords in the canonical edge order of `graph`.
    pub fn aligned<'a>(&'a self, graph: &WeightedGraph) -> Result<Vec<&'a Codeword>, CodingError> {
        if self.entries.len() != graph.edge_count() {
            return Err(CodingError::Mismatch(format!(
                "{} codewords for {} edges",
                self.entries.len(),
                graph.edge_count()
            )));
        }
        graph
            .edges()
            .iter()
            .map(|e| self.get(*e).ok_or(CodingError::MissingEdge(*e)))
            .collect()
    }

    /// Checks that every edge of `graph` decodes to its weight within `tol`.
    pub fn check_consistent(&self, graph: &WeightedGraph, tol: f64) -> Result<(), CodingError> {
        for (cw, (&e, &w)) in self
            .aligned(graph)?
            .into_iter()
            .zip(graph.edges().iter().zip(graph.weights()))
        {
            let got = cw.nominal()?;
            if (got - w).abs() > tol * w.abs().max(1.0) {
                return Err(CodingError::Mismatch(format!(
                    "edge {e} decodes to {got}, graph weight is {w}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    #[test]
    fn decode_examples() {
        let log2 = DecodingFunction::log_linear(2.0).unwrap();
        assert_relative_eq!(log2.decode(1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(log2.decode(-LN_2).unwrap(), -1.0, epsilon = 1e-15);
        let lin = DecodingFunction::linear(5.0, 0.0).unwrap();
        assert_eq!(lin.decode(5.0).unwrap(), 25.0);
    }

    #[test]
    fn lipschitz_examples() {
        let k2 = DecodingFunction::log_linear(2.0).unwrap().lipschitz();
        let k3 = DecodingFunction::log_linear(3.0).unwrap().lipschitz();
        assert!((k2 - 1.4427).abs() < 1e-4);
        assert!((k3 - 0.9102).abs() < 1e-4);
        assert_eq!(DecodingFunction::linear(2.0, 0.0).unwrap().lipschitz(), 2.0);
        assert_eq!(
            DecodingFunction::linear(-2.0, 1.0).unwrap().lipschitz(),
            2.0
        );
    }

    #[test]
    fn log_linear_slope_matches_at_branch_join() {
        let beta: f64 = 2.0;
        let f = DecodingFunction::log_linear(beta).unwrap();
        let h = 1e-7;
        let right = (f.decode(h).unwrap() - f.decode(0.0).unwrap()) / h;
        let left = (f.decode(0.0).unwrap() - f.decode(-h).unwrap()) / h;
        assert!((right - 1.0 / beta.ln()).abs() < 1e-6);
        assert!((left - 1.0 / beta.ln()).abs() < 1e-12);
    }

    #[test]
    fn encode_examples() {
        let log3 = DecodingFunction::log_linear(3.0).unwrap();
        assert_relative_eq!(log3.encode(1.0).unwrap(), 2.0, epsilon = 1e-12);
        let lin5 = DecodingFunction::linear(5.0, 0.0).unwrap();
        assert_eq!(lin5.encode(25.0).unwrap(), 5.0);
        let alpha = 3.0 / 13.0;
        let op = DecodingFunction::linear(1.0 / LN_2, 0.0).unwrap();
        assert_relative_eq!(op.encode(alpha).unwrap(), alpha * LN_2, epsilon = 1e-15);
    }

    #[test]
    fn invalid_constructors() {
        assert_eq!(
            DecodingFunction::linear(0.0, 1.0).unwrap_err(),
            CodingError::ZeroSlope
        );
        assert!(DecodingFunction::log_linear(1.0).is_err());
        assert!(DecodingFunction::log_linear(0.5).is_err());
        assert!(DecodingFunction::custom("bad", |x| x, 0.0, (0.0, 1.0)).is_err());
    }

    #[test]
    fn custom_out_of_domain_raises_alert() {
        let f = DecodingFunction::custom("sqrt", f64::sqrt, 10.0, (0.01, 100.0)).unwrap();
        assert!(f.decode(4.0).is_ok());
        assert!(matches!(
            f.decode(-1.0),
            Err(CodingError::OutOfDomain { .. })
        ));
        assert!(matches!(
            f.decode(f64::NAN),
            Err(CodingError::OutOfDomain { .. })
        ));
        let theta = f.encode(3.0).unwrap();
        assert_relative_eq!(theta, 9.0, epsilon = 1e-9);
        assert_eq!(f.encode(50.0), Err(CodingError::NotInImage(50.0)));
    }

    #[test]
    fn characterization_reports() {
        let grid = linspace(-5.0, 5.0, 200);
        let log2 = DecodingFunction::log_linear(2.0).unwrap();
        let r = log2.verify_characterization(&grid);
        assert!(r.passed(), "{r:?}");

        let lin = DecodingFunction::linear(-3.0, 1.0).unwrap();
        let r = lin.verify_characterization(&grid);
        assert!(r.passed());
        assert!((r.max_sampled_slope - 3.0).abs() < 1e-9);

        let sq = DecodingFunction::custom("square", |x| x * x, 1.0, (0.0, 2.0)).unwrap();
        let r = sq.verify_characterization(&linspace(0.0, 2.0, 200));
        assert!(!r.concave);
        assert!(!r.lipschitz);
        assert!(r.non_constant);
    }

    #[test]
    fn parse_decoder_specs() {
        let f: DecodingFunction = "log:2".parse().unwrap();
        assert!(matches!(f, DecodingFunction::LogLinear { beta } if beta == 2.0));
        let f: DecodingFunction = "linear:5".parse().unwrap();
        assert!(matches!(f, DecodingFunction::Linear { a, b } if a == 0.0 && b == 5.0));
        let f: DecodingFunction = "linear:2:1.5".parse().unwrap();
        assert_eq!(f.decode(1.0).unwrap(), 3.5);
        assert!("cubic:3".parse::<DecodingFunction>().is_err());
        assert!("log:x".parse::<DecodingFunction>().is_err());
    }

    #[test]
    fn broadcast_table_nominals() {
        let edges = [Edge::new(1, 2), Edge::new(2, 3)];
        let cw = Codeword::new(5.0, DecodingFunction::linear(5.0, 0.0).unwrap());
        let t = CodewordTable::broadcast(&edges, cw);
        assert_eq!(t.mode(), TableMode::Broadcast);
        let w = t.nominal_weights().unwrap();
        assert!(w.values().all(|&x| x == 25.0));
    }

    #[test]
    fn nominal_weights_reject_non_positive() {
        let t = CodewordTable::per_edge([(
            Edge::new(1, 2),
            Codeword::new(-1.0, DecodingFunction::linear(1.0, 0.0).unwrap()),
        )]);
        assert!(matches!(
            t.nominal_weights(),
            Err(CodingError::NonPositiveNominal(_, _))
        ));
    }

    #[test]
    fn encode_graph_round_trips() {
        let g = WeightedGraph::build(3, &[(1, 2), (2, 3)], &[0.3, 7.0]).unwrap();
        let t = CodewordTable::encode_graph(&g, |_| DecodingFunction::log_linear(3.0).unwrap())
            .unwrap();
        t.check_consistent(&g, 1e-12).unwrap();
        let back = t.nominal_graph(3).unwrap();
        for (a, b) in back.weights().iter().zip(g.weights()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn restricted_spec_raises_out_of_domain() {
        let spec: DecoderSpec =
            toml::from_str("kind = \"linear\"\nb = 2.0\ndomain = [0.0, 5.0]").unwrap();
        let d = spec.build().unwrap();
        assert_eq!(d.decode(1.5).unwrap(), 3.0);
        assert_eq!(d.lipschitz(), 2.0);
        assert!(matches!(
            d.decode(-0.1),
            Err(CodingError::OutOfDomain { .. })
        ));
    }
}
