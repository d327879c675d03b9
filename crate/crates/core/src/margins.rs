//! Robustness certificates for single-edge codeword tampering.
//!
//! Continuous time: an edge `(u, v)` tolerates weight deviations down to
//! `-1/R_uv`, hence codeword deviations up to `ρ = (K_uv R_uv)⁻¹`. Discrete
//! time adds the step-gain constraint through Ψ_G. The second-order
//! (PI estimator) results are expressed through the closed-form spectrum of
//! its state matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::coding::{CodewordTable, DecodingFunction};
use crate::error::{GraphError, MarginError};
use crate::graph::{Edge, WeightedGraph};

/// Relative tolerance under which a deviation counts as sitting on a margin.
const MARGINAL_REL_TOL: f64 = 1e-12;

/// How a deviation magnitude relates to a closed margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Strictly inside the margin.
    Stable,
    /// On the boundary; clustered consensus is possible.
    Marginal,
    /// Outside the margin. The certificate says nothing.
    Uncertified,
}

pub fn classify_deviation(deviation: f64, margin: f64) -> Verdict {
    let d = deviation.abs();
    if (d - margin).abs() <= MARGINAL_REL_TOL * margin.max(f64::MIN_POSITIVE) {
        Verdict::Marginal
    } else if d < margin {
        Verdict::Stable
    } else {
        Verdict::Uncertified
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub edge: Edge,
    pub effective_resistance: f64,
    /// `1/R_uv`, the weight-space margin.
    pub weight_margin: f64,
    pub lipschitz: f64,
    /// `ρ = 1/(K R)`.
    pub codeword_margin: f64,
}

impl MarginReport {
    fn new(edge: Edge, effective_resistance: f64, lipschitz: f64) -> Self {
        let weight_margin = 1.0 / effective_resistance;
        MarginReport {
            edge,
            effective_resistance,
            weight_margin,
            lipschitz,
            codeword_margin: weight_margin / lipschitz,
        }
    }

    pub fn classify(&self, codeword_deviation: f64) -> Verdict {
        classify_deviation(codeword_deviation, self.codeword_margin)
    }
}

/// `1/R_uv`, defined for edges only.
pub fn weight_margin(g: &WeightedGraph, u: usize, v: usize) -> Result<f64, MarginError> {
    Ok(1.0 / g.edge_resistance(u, v)?)
}

pub fn codeword_margin(
    g: &WeightedGraph,
    table: &CodewordTable,
    u: usize,
    v: usize,
) -> Result<MarginReport, MarginError> {
    let r = g.edge_resistance(u, v)?;
    let edge = Edge::new(u, v);
    let k = table.lipschitz(edge)?;
    Ok(MarginReport::new(edge, r, k))
}

/// Same certificate with the Lipschitz constant given directly.
pub fn codeword_margin_for(
    g: &WeightedGraph,
    decoder: &DecodingFunction,
    u: usize,
    v: usize,
) -> Result<MarginReport, MarginError> {
    let r = g.edge_resistance(u, v)?;
    Ok(MarginReport::new(Edge::new(u, v), r, decoder.lipschitz()))
}

/// Margin on the K_P subcodeword of one edge, computed on the uniformly
/// K_P-weighted graph.
pub fn second_order_kp_margin(
    g_p: &WeightedGraph,
    decoder: &DecodingFunction,
    u: usize,
    v: usize,
) -> Result<MarginReport, MarginError> {
    if !g_p.is_uniform() {
        return Err(MarginError::NotUniform);
    }
    codeword_margin_for(g_p, decoder, u, v)
}

/// PI average consensus estimator gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct PiAceParams {
    pub alpha: f64,
    pub kp: f64,
    pub ki: f64,
}

impl PiAceParams {
    pub fn new(alpha: f64, kp: f64, ki: f64) -> Result<Self, MarginError> {
        let p = PiAceParams { alpha, kp, ki };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MarginError> {
        for (name, v) in [("alpha", self.alpha), ("kp", self.kp), ("ki", self.ki)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(MarginError::NonPositiveParameter(name));
            }
        }
        Ok(())
    }
}

impl Default for PiAceParams {
    fn default() -> Self {
        PiAceParams {
            alpha: 25.0,
            kp: 50.0,
            ki: 10.0,
        }
    }
}

/// The three broadcast-attack bounds, evaluated as
/// `|δ_α| < α/K_α`,
/// `|δ_KP| < (α − K_α|δ_α| + λ_n K_P)/(λ_n K_KP)`,
/// `|δ_KI| < K_I/K_KI`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondOrderMargins {
    pub bound_alpha: f64,
    pub bound_ki: f64,
    pub lambda_max: f64,
    pub params: PiAceParams,
    pub k_alpha: f64,
    pub k_kp: f64,
    pub k_ki: f64,
}

impl SecondOrderMargins {
    /// Bound on `|δ_KP|` given the magnitude of the α deviation.
    pub fn bound_kp(&self, alpha_deviation: f64) -> f64 {
        let PiAceParams { alpha, kp, .. } = self.params;
        (alpha - self.k_alpha * alpha_deviation.abs() + self.lambda_max * kp)
            / (self.lambda_max * self.k_kp)
    }

    /// `(intercept, slope)` of the affine form `bound_kp = c₀ − c₁ |δ_α|`.
    pub fn bound_kp_affine(&self) -> (f64, f64) {
        (
            self.bound_kp(0.0),
            self.k_alpha / (self.lambda_max * self.k_kp),
        )
    }

    /// True when all three strict inequalities hold.
    pub fn certifies(&self, d_alpha: f64, d_kp: f64, d_ki: f64) -> bool {
        d_alpha.abs() < self.bound_alpha
            && d_kp.abs() < self.bound_kp(d_alpha)
            && d_ki.abs() < self.bound_ki
    }
}

pub fn second_order_all_margins(
    params: PiAceParams,
    k_alpha: f64,
    k_kp: f64,
    k_ki: f64,
    lambda_max: f64,
) -> Result<SecondOrderMargins, MarginError> {
    params.validate()?;
    for (name, v) in [
        ("k_alpha", k_alpha),
        ("k_kp", k_kp),
        ("k_ki", k_ki),
        ("lambda_max", lambda_max),
    ] {
        if !(v > 0.0) {
            return Err(MarginError::NonPositiveParameter(name));
        }
    }
    Ok(SecondOrderMargins {
        bound_alpha: params.alpha / k_alpha,
        bound_ki: params.ki / k_ki,
        lambda_max,
        params,
        k_alpha,
        k_kp,
        k_ki,
    })
}

/// Closed-form spectrum of the PI estimator state matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderSpectrum {
    pub phi: Vec<f64>,
    pub sigma: Vec<Complex64>,
    /// `λ_{2(i-1)+j} = φ_i + (−1)^j σ_i`, so entries `2i` and `2i+1`
    /// (0-based) are `φ_i − σ_i` and `φ_i + σ_i`.
    pub eigenvalues: Vec<Complex64>,
}

impl SecondOrderSpectrum {
    pub fn count_near_zero(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|z| z.norm() < tol).count()
    }
}

/// Square root with the branch fixed by `Im ≥ 0`.
fn sigma_branch(radicand: f64) -> Complex64 {
    let s = Complex64::new(radicand, 0.0).sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

fn spectrum_from(laplacian_eigs: &[f64], alpha: f64, kp: f64, ki: f64) -> SecondOrderSpectrum {
    let n = laplacian_eigs.len();
    let mut phi = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(2 * n);
    for &lam in laplacian_eigs {
        let p = 0.5 * (alpha + kp * lam);
        let s = sigma_branch(p * p - (ki * lam).powi(2));
        phi.push(p);
        sigma.push(s);
        eigenvalues.push(Complex64::new(p, 0.0) - s);
        eigenvalues.push(Complex64::new(p, 0.0) + s);
    }
    SecondOrderSpectrum {
        phi,
        sigma,
        eigenvalues,
    }
}

/// Spectrum of `M = [[K_P L + αI, −K_I L], [K_I L, 0]]` from the Laplacian
/// eigenvalues (ascending, the first being zero).
pub fn pi_ace_eigenvalues(laplacian_eigs: &[f64], params: PiAceParams) -> SecondOrderSpectrum {
    spectrum_from(laplacian_eigs, params.alpha, params.kp, params.ki)
}

/// Weight-space deviations of the three broadcast parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GainDeviations {
    pub alpha: f64,
    pub kp: f64,
    pub ki: f64,
}

pub fn perturbed_pi_ace_eigenvalues(
    laplacian_eigs: &[f64],
    params: PiAceParams,
    dev: GainDeviations,
) -> SecondOrderSpectrum {
    spectrum_from(
        laplacian_eigs,
        params.alpha + dev.alpha,
        params.kp + dev.kp,
        params.ki + dev.ki,
    )
}

/// Explicit `2n×2n` state matrix, for direct eigendecomposition.
pub fn pi_ace_matrix(laplacian: &DMatrix<f64>, alpha: f64, kp: f64, ki: f64) -> DMatrix<f64> {
    let n = laplacian.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let l = laplacian[(i, j)];
            m[(i, j)] = kp * l;
            m[(i, n + j)] = -ki * l;
            m[(n + i, j)] = ki * l;
        }
        m[(i, i)] += alpha;
    }
    m
}

/// Discrete-time certificate for one edge at step gain ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DtMarginReport {
    pub edge: Edge,
    pub epsilon: f64,
    pub psi_g: f64,
    pub weighted_degree_u: f64,
    pub weighted_degree_v: f64,
    pub lipschitz: f64,
    pub effective_resistance: f64,
    /// `ρ = 1/(K R)`, the continuous-time margin.
    pub codeword_margin: f64,
    /// `ξ = K⁻¹ min{R⁻¹, ε⁻¹ − Ψ}`, clamped at zero.
    pub xi: f64,
    pub epsilon_star: f64,
    pub epsilon_star_global: f64,
    /// Set when `ε⁻¹ ≤ Ψ_G`, in which case `xi` is reported as zero.
    pub step_gain_infeasible: bool,
}

impl DtMarginReport {
    /// `ψ_i(δ) = w_i + K|δ|` for `i = u`.
    pub fn psi_u(&self, deviation: f64) -> f64 {
        self.weighted_degree_u + self.lipschitz * deviation.abs()
    }

    pub fn psi_v(&self, deviation: f64) -> f64 {
        self.weighted_degree_v + self.lipschitz * deviation.abs()
    }

    /// `φ_G(δ) = max{Ψ_G, ψ_u(δ), ψ_v(δ)}`.
    pub fn phi(&self, deviation: f64) -> f64 {
        self.psi_g
            .max(self.psi_u(deviation))
            .max(self.psi_v(deviation))
    }

    /// Both conditions of the discrete-time theorem: `|δ| ≤ ρ` and
    /// `φ_G(δ) < ε⁻¹`.
    pub fn theorem_certifies(&self, deviation: f64) -> bool {
        deviation.abs() <= self.codeword_margin && self.phi(deviation) < 1.0 / self.epsilon
    }

    pub fn classify(&self, deviation: f64) -> Verdict {
        classify_deviation(deviation, self.xi)
    }
}

fn check_step_gain(g: &WeightedGraph, epsilon: f64) -> Result<(), MarginError> {
    let upper = 2.0 / g.spectral().lambda_max();
    if !(epsilon > 0.0 && epsilon < upper) {
        return Err(MarginError::StepGainOutOfRange { epsilon, upper });
    }
    Ok(())
}

pub fn dt_margin(
    g: &WeightedGraph,
    table: &CodewordTable,
    u: usize,
    v: usize,
    epsilon: f64,
) -> Result<DtMarginReport, MarginError> {
    let k = table.lipschitz(Edge::new(u, v));
    let k = match k {
        Ok(k) => k,
        Err(_) if !g.contains_edge(u, v) => {
            return Err(GraphError::NotAnEdge {
                pair: Edge::new(u, v),
            }
            .into())
        }
        Err(e) => return Err(e.into()),
    };
    dt_margin_with_lipschitz(g, k, u, v, epsilon)
}

pub fn dt_margin_with_lipschitz(
    g: &WeightedGraph,
    lipschitz: f64,
    u: usize,
    v: usize,
    epsilon: f64,
) -> Result<DtMarginReport, MarginError> {
    let r = g.edge_resistance(u, v)?;
    check_step_gain(g, epsilon)?;
    let degrees = g.weighted_degrees();
    let psi = g.max_weighted_degree();
    let headroom = 1.0 / epsilon - psi;
    let infeasible = headroom <= 0.0;
    let xi = if infeasible {
        0.0
    } else {
        (1.0 / r).min(headroom) / lipschitz
    };
    Ok(DtMarginReport {
        edge: Edge::new(u, v),
        epsilon,
        psi_g: psi,
        weighted_degree_u: degrees[u - 1],
        weighted_degree_v: degrees[v - 1],
        lipschitz,
        effective_resistance: r,
        codeword_margin: 1.0 / (lipschitz * r),
        xi,
        epsilon_star: 1.0 / (psi + 1.0 / r),
        epsilon_star_global: dt_epsilon_star_global(g),
        step_gain_infeasible: infeasible,
    })
}

/// `ε*_uv = (Ψ_G + R_uv⁻¹)⁻¹`.
pub fn dt_epsilon_star(g: &WeightedGraph, u: usize, v: usize) -> Result<f64, MarginError> {
    let r = g.edge_resistance(u, v)?;
    Ok(1.0 / (g.max_weighted_degree() + 1.0 / r))
}

/// Minimum of `ε*_uv` over all edges.
pub fn dt_epsilon_star_global(g: &WeightedGraph) -> f64 {
    let max_conductance = g
        .edges()
        .iter()
        .map(|e| {
            1.0 / g
                .effective_resistance(e.u, e.v)
                .expect("edge endpoints are valid")
        })
        .fold(0.0, f64::max);
    1.0 / (g.max_weighted_degree() + max_conductance)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub lipschitz: f64,
    pub codeword_margin: f64,
}

/// `(K, ρ)` for every candidate decoder on one edge, sorted by K.
pub fn tradeoff_scan(
    g: &WeightedGraph,
    u: usize,
    v: usize,
    decoders: &[DecodingFunction],
) -> Result<Vec<TradeoffPoint>, MarginError> {
    let r = g.edge_resistance(u, v)?;
    let mut out: Vec<TradeoffPoint> = decoders
        .iter()
        .map(|d| {
            let k = d.lipschitz();
            TradeoffPoint {
                lipschitz: k,
                codeword_margin: 1.0 / (k * r),
            }
        })
        .collect();
    out.sort_by(|a, b| a.lipschitz.total_cmp(&b.lipschitz));
    Ok(out)
}
