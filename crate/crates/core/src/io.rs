//! Graph files and codeword-table files.
//!
//! Graph file:
//!
//! ```text
//! # five-node example
//! n 5
//! 1 2 10
//! 3 4 1
//! ```
//!
//! A record with two columns has weight 1. Codeword tables are TOML; see
//! [`CodewordFile`].

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::coding::{Codeword, CodewordTable, DecoderSpec};
use crate::error::ParseError;
use crate::graph::{Edge, WeightedGraph};
use crate::sim::PiAceCoding;

pub const SCHEMA_VERSION: u32 = 1;

pub fn read_file(path: &Path) -> Result<String, ParseError> {
    std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn line_err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Line {
        line,
        message: message.into(),
    }
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph, ParseError> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields[0] == "n" {
            if n.is_some() {
                return Err(line_err(line, "node count given twice"));
            }
            let [_, count] = fields.as_slice() else {
                return Err(line_err(line, "expected `n <count>`"));
            };
            let count: usize = count
                .parse()
                .map_err(|_| line_err(line, format!("bad node count '{count}'")))?;
            n = Some(count);
            continue;
        }
        let Some(nodes) = n else {
            return Err(line_err(line, "edge record before `n <count>`"));
        };
        let node = |s: &str| -> Result<usize, ParseError> {
            let v: usize = s
                .parse()
                .map_err(|_| line_err(line, format!("bad node id '{s}'")))?;
            if v == 0 || v > nodes {
                return Err(line_err(line, format!("node {v} out of range 1..={nodes}")));
            }
            Ok(v)
        };
        let (u, v, w) = match fields.as_slice() {
            [u, v] => (node(u)?, node(v)?, 1.0),
            [u, v, w] => {
                let w: f64 = w
                    .parse()
                    .map_err(|_| line_err(line, format!("bad weight '{w}'")))?;
                (node(u)?, node(v)?, w)
            }
            _ => return Err(line_err(line, "expected `u v [weight]`")),
        };
        if u == v {
            return Err(line_err(line, format!("self-loop at node {u}")));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(line_err(line, format!("weight must be positive, got {w}")));
        }
        let e = Edge::new(u, v);
        if !seen.insert(e) {
            return Err(line_err(line, format!("duplicate edge {e}")));
        }
        edges.push(e);
        weights.push(w);
    }
    let n = n.ok_or_else(|| ParseError::Format("missing `n <count>` line".into()))?;
    WeightedGraph::build(n, &edges, &weights).map_err(|e| ParseError::Format(e.to_string()))
}

pub fn load_graph(path: &Path) -> Result<WeightedGraph, ParseError> {
    parse_graph(&read_file(path)?).map_err(|e| with_path(e, path))
}

pub fn write_graph(g: &WeightedGraph) -> String {
    let mut s = format!("n {}\n", g.node_count());
    for (e, w) in g.edges().iter().zip(g.weights()) {
        let _ = writeln!(s, "{} {} {}", e.u, e.v, w);
    }
    s
}

pub(crate) fn with_path(e: ParseError, path: &Path) -> ParseError {
    match e {
        ParseError::Io { .. } => e,
        other => ParseError::Io {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    }
}

/// 1-based line of a byte offset.
pub fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Maps a TOML error to a line-numbered parse error where possible.
pub fn toml_error(text: &str, e: toml::de::Error) -> ParseError {
    match e.span() {
        Some(span) => line_err(line_of(text, span.start), e.message().to_string()),
        None => ParseError::Format(e.message().to_string()),
    }
}

/// A subcodeword given directly (`theta`) or as the weight it must decode
/// to (`weight`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodewordEntry {
    pub decoder: DecoderSpec,
    pub theta: Option<f64>,
    pub weight: Option<f64>,
}

impl CodewordEntry {
    pub fn codeword(&self) -> Result<Codeword, ParseError> {
        let decoder = self
            .decoder
            .build()
            .map_err(|e| ParseError::Format(e.to_string()))?;
        match (self.theta, self.weight) {
            (Some(theta), None) => Ok(Codeword::new(theta, decoder)),
            (None, Some(w)) => {
                Codeword::for_weight(w, decoder).map_err(|e| ParseError::Format(e.to_string()))
            }
            _ => Err(ParseError::Format(
                "each codeword needs exactly one of `theta` or `weight`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub u: usize,
    pub v: usize,
    #[serde(flatten)]
    pub codeword: CodewordEntry,
}

/// Codeword-table file.
///
/// ```toml
/// schema_version = 1
///
/// [[edge]]
/// u = 3
/// v = 4
/// decoder = { kind = "log", beta = 2.0 }
/// theta = 1.0
///
/// # estimator gains, broadcast
/// [alpha]
/// decoder = { kind = "linear", b = 5.0 }
/// weight = 25.0
/// ```
///
/// `kp_edge` / `ki_edge` lists replace the broadcast `kp` / `ki` entries
/// with per-edge subcodewords.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodewordFile {
    pub schema_version: u32,
    #[serde(default)]
    pub edge: Vec<EdgeEntry>,
    pub alpha: Option<CodewordEntry>,
    pub kp: Option<CodewordEntry>,
    pub ki: Option<CodewordEntry>,
    #[serde(default)]
    pub kp_edge: Vec<EdgeEntry>,
    #[serde(default)]
    pub ki_edge: Vec<EdgeEntry>,
}

fn edge_table(entries: &[EdgeEntry], what: &str) -> Result<CodewordTable, ParseError> {
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(entries.len());
    for entry in entries {
        let e = Edge::new(entry.u, entry.v);
        if !seen.insert(e) {
            return Err(ParseError::Format(format!("{what}: edge {e} listed twice")));
        }
        rows.push((e, entry.codeword.codeword()?));
    }
    Ok(CodewordTable::per_edge(rows))
}

impl CodewordFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let file: CodewordFile = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ParseError::Format(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ParseError> {
        Self::parse(&read_file(path)?).map_err(|e| with_path(e, path))
    }

    /// Consensus-weight table from the `[[edge]]` entries.
    pub fn edge_table(&self) -> Result<CodewordTable, ParseError> {
        if self.edge.is_empty() {
            return Err(ParseError::Format("no [[edge]] entries".into()));
        }
        edge_table(&self.edge, "edge")
    }

    /// Estimator gains for `graph`.
    pub fn pi_ace_coding(&self, graph: &WeightedGraph) -> Result<PiAceCoding, ParseError> {
        let alpha = self
            .alpha
            .as_ref()
            .ok_or_else(|| ParseError::Format("missing [alpha]".into()))?
            .codeword()?;
        let gain = |broadcast: &Option<CodewordEntry>, per_edge: &[EdgeEntry], name: &str| match (
            broadcast,
            per_edge.is_empty(),
        ) {
            (Some(entry), true) => Ok(CodewordTable::broadcast(graph.edges(), entry.codeword()?)),
            (None, false) => edge_table(per_edge, name),
            (Some(_), false) => Err(ParseError::Format(format!(
                "give either [{name}] or [[{name}_edge]], not both"
            ))),
            (None, true) => Err(ParseError::Format(format!("missing [{name}]"))),
        };
        Ok(PiAceCoding {
            alpha,
            kp: gain(&self.kp, &self.kp_edge, "kp")?,
            ki: gain(&self.ki, &self.ki_edge, "ki")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    #[test]
    fn graph_round_trip() {
        let g = bundled::five_node_weighted();
        assert_eq!(parse_graph(&write_graph(&g)).unwrap(), g);
        let text = "# comment\nn 3\n1 2   # unit\n2 3 2.5\n";
        let g = parse_graph(text).unwrap();
        assert_eq!(g.weights(), &[1.0, 2.5]);
    }

    #[test]
    fn graph_errors_carry_lines() {
        let cases = [
            ("n 3\n1 2 1\n2 4 1\n", 3),
            ("n 3\n1 2 -1\n", 2),
            ("n 3\n1 2 1\n2 1 1\n", 3),
            ("1 2 1\n", 1),
            ("n 3\n1 2 x\n", 2),
            ("n 3\n2 2 1\n", 2),
        ];
        for (text, want) in cases {
            match parse_graph(text) {
                Err(ParseError::Line { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(
            parse_graph("n 3\n1 2 1\n"),
            Err(ParseError::Format(_))
        ));
    }

    #[test]
    fn codeword_file() {
        let text = r#"
schema_version = 1

[[edge]]
u = 4
v = 3
decoder = { kind = "log", beta = 2.0 }
theta = 1.0

[[edge]]
u = 1
v = 2
decoder = { kind = "linear", b = 1.0 }
weight = 10.0
"#;
        let t = CodewordFile::parse(text).unwrap().edge_table().unwrap();
        let w = t.nominal_weights().unwrap();
        assert_eq!(w[&Edge::new(3, 4)], 1.0);
        assert_eq!(w[&Edge::new(1, 2)], 10.0);
    }

    #[test]
    fn codeword_file_rejects_unknowns() {
        let bad_key = "schema_version = 1\n[[edge]]\nu = 1\nv = 2\ndecoder = { kind = \"linear\", b = 1.0 }\ntheta = 1.0\nthetta = 2.0\n";
        assert!(matches!(
            CodewordFile::parse(bad_key),
            Err(ParseError::Line { .. })
        ));
        let bad_decoder = "schema_version = 1\n[[edge]]\nu = 1\nv = 2\ndecoder = { kind = \"linear\", slope = 1.0 }\ntheta = 1.0\n";
        assert!(CodewordFile::parse(bad_decoder).is_err());
        assert!(CodewordFile::parse("schema_version = 2\n").is_err());
        let both = "schema_version = 1\n[[edge]]\nu = 1\nv = 2\ndecoder = { kind = \"linear\", b = 1.0 }\ntheta = 1.0\nweight = 1.0\n";
        assert!(CodewordFile::parse(both).unwrap().edge_table().is_err());
    }

    #[test]
    fn gains_file() {
        let text = r#"
schema_version = 1
[alpha]
decoder = { kind = "linear", b = 5.0 }
theta = 5.0
[kp]
decoder = { kind = "linear", b = 2.0 }
weight = 50.0
[[ki_edge]]
u = 1
v = 2
decoder = { kind = "linear", b = 0.1 }
weight = 10.0
"#;
        let g = WeightedGraph::uniform(2, &[(1, 2)], 1.0).unwrap();
        let c = CodewordFile::parse(text)
            .unwrap()
            .pi_ace_coding(&g)
            .unwrap();
        let (a, kp, ki) = c.nominal(&g).unwrap();
        assert_eq!(a, 25.0);
        assert!((kp[0] - 50.0).abs() < 1e-12 && (ki[0] - 10.0).abs() < 1e-12);
    }
}
