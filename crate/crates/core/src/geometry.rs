//! Star-shaped boundaries `r = ρ(θ)` over the unit sphere.
//!
//! In the plane `θ` is the usual polar angle and perturbations carry cosine and
//! sine modes. For `N ≥ 3` only axisymmetric (zonal) boundaries are represented:
//! `θ` is the polar angle measured from the `x_1` axis and all in-plane vectors
//! live in the meridian half-plane `(x_1, |x'|)`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{self, AngularJet};

/// The `(D_0, Ω_0, σ)` configuration: dimension, core radius and core conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dim: usize,
    pub core_radius: f64,
    pub sigma: f64,
}

impl ProblemParams {
    pub fn new(dim: usize, core_radius: f64, sigma: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::param("dim", "dimension must be at least 2"));
        }
        if !(0.0..1.0).contains(&core_radius) {
            return Err(Error::param("core_radius", "must lie in [0, 1)"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::param("sigma", "must be positive"));
        }
        Ok(ProblemParams {
            dim,
            core_radius,
            sigma,
        })
    }

    /// One-phase configuration (`D = ∅`).
    pub fn one_phase(dim: usize) -> Result<Self> {
        Self::new(dim, 0.0, 1.0)
    }

    pub fn is_one_phase(&self) -> bool {
        self.core_radius == 0.0
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        ProblemParams { sigma, ..*self }
    }
}

/// Harmonic family of a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Cos,
    Sin,
    Zonal,
}

/// Zero-mean boundary perturbation, truncated at degree `K`.
///
/// Coefficients multiply the unit-peak harmonics: `cos kθ` / `sin kθ` in the
/// plane and `P̃_k(cos θ)` (the zonal harmonic with `P̃_k(1) = 1`) for `N ≥ 3`.
/// Entry `k - 1` holds degree `k`; there is no degree-0 slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCoeffs {
    dim: usize,
    /// Cosine coefficients in the plane, zonal coefficients otherwise.
    pub(crate) cos: Vec<f64>,
    /// Sine coefficients; empty for `N ≥ 3`.
    pub(crate) sin: Vec<f64>,
}

impl ShapeCoeffs {
    pub fn zeros(dim: usize, truncation: usize) -> Self {
        ShapeCoeffs {
            dim,
            cos: vec![0.0; truncation],
            sin: if dim == 2 {
                vec![0.0; truncation]
            } else {
                Vec::new()
            },
        }
    }

    /// Build from `(degree, kind, value)` triples; the truncation is the largest degree
    /// unless a larger `min_truncation` is given.
    pub fn from_modes(
        dim: usize,
        modes: &[(usize, Kind, f64)],
        min_truncation: usize,
    ) -> Result<Self> {
        let kmax = modes
            .iter()
            .map(|m| m.0)
            .max()
            .unwrap_or(0)
            .max(min_truncation);
        let mut out = Self::zeros(dim, kmax);
        for &(k, kind, v) in modes {
            if k == 0 {
                return Err(Error::param(
                    "modes",
                    "degree 0 is not allowed (zero-mean perturbation)",
                ));
            }
            match (dim, kind) {
                (2, Kind::Zonal) => {
                    return Err(Error::param(
                        "modes",
                        "use `cos`/`sin` modes in dimension 2",
                    ));
                }
                (d, Kind::Sin) if d >= 3 => {
                    return Err(Error::param(
                        "modes",
                        "only zonal modes are supported for N >= 3",
                    ));
                }
                _ => {}
            }
            if !v.is_finite() {
                return Err(Error::param("modes", "non-finite coefficient"));
            }
            out.set(k, kind, out.get(k, kind) + v);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> usize {
        self.cos.len()
    }

    pub fn get(&self, k: usize, kind: Kind) -> f64 {
        if k == 0 || k > self.truncation() {
            return 0.0;
        }
        match kind {
            Kind::Cos | Kind::Zonal => self.cos[k - 1],
            Kind::Sin => self.sin.get(k - 1).copied().unwrap_or(0.0),
        }
    }

    /// Set one coefficient, growing the truncation if needed.
    ///
    /// Panics on a sine mode in dimension `N ≥ 3`.
    pub fn set(&mut self, k: usize, kind: Kind, value: f64) {
        assert!(k >= 1, "degree 0 has no slot");
        if k > self.truncation() {
            self.resize(k);
        }
        match kind {
            Kind::Cos | Kind::Zonal => self.cos[k - 1] = value,
            Kind::Sin => {
                assert!(self.dim == 2, "sine modes exist only in the plane");
                self.sin[k - 1] = value;
            }
        }
    }

    pub fn resize(&mut self, truncation: usize) {
        self.cos.resize(truncation, 0.0);
        if self.dim == 2 {
            self.sin.resize(truncation, 0.0);
        }
    }

    pub fn resized(&self, truncation: usize) -> Self {
        let mut out = self.clone();
        out.resize(truncation);
        out
    }

    /// The families present in this dimension.
    pub fn kinds(&self) -> &'static [Kind] {
        if self.dim == 2 {
            &[Kind::Cos, Kind::Sin]
        } else {
            &[Kind::Zonal]
        }
    }

    /// Nonzero modes as `(degree, kind, value)`.
    pub fn modes(&self) -> Vec<(usize, Kind, f64)> {
        let mut out = Vec::new();
        for k in 1..=self.truncation() {
            for &kind in self.kinds() {
                let v = self.get(k, kind);
                if v != 0.0 {
                    out.push((k, kind, v));
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|&c| c == 0.0)
    }

    /// No sine content, i.e. invariant under `θ ↦ -θ`.
    pub fn is_reflection_symmetric(&self) -> bool {
        self.sin.iter().all(|&c| c == 0.0)
    }

    /// Largest `p` such that every nonzero mode has degree divisible by `p`; 0 for the zero shape.
    pub fn rotation_period(&self) -> usize {
        self.modes().into_iter().fold(0, |p, (k, _, _)| gcd(p, k))
    }

    pub fn max_abs(&self) -> f64 {
        self.cos
            .iter()
            .chain(&self.sin)
            .fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Boundary function and its θ-derivatives at `theta`.
    pub fn jet(&self, theta: f64) -> AngularJet {
        let kmax = self.truncation();
        let mut out = AngularJet::default();
        if kmax == 0 {
            return out;
        }
        if self.dim == 2 {
            for k in 1..=kmax {
                let kf = k as f64;
                let (s, c) = (kf * theta).sin_cos();
                let (a, b) = (self.cos[k - 1], self.sin[k - 1]);
                out.value += a * c + b * s;
                out.d1 += kf * (-a * s + b * c);
                out.d2 += -kf * kf * (a * c + b * s);
            }
        } else {
            let jets = harmonics::unit_harmonics(self.dim, kmax, theta);
            for k in 1..=kmax {
                let a = self.cos[k - 1];
                out.value += a * jets[k].value;
                out.d1 += a * jets[k].d1;
                out.d2 += a * jets[k].d2;
            }
        }
        out
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.jet(theta).value
    }

    /// `L²(S^{N-1})` norm of the synthesized function.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for k in 1..=self.truncation() {
            let w = harmonics::unit_harmonic_norm_sq(k, self.dim);
            for &kind in self.kinds() {
                acc += w * self.get(k, kind).powi(2);
            }
        }
        acc.sqrt()
    }

    /// Sup norm sampled on the default quadrature grid.
    pub fn sup_norm(&self) -> f64 {
        let rule = quadrature(self.dim, default_node_count(self.dim, self.truncation()));
        rule.nodes
            .iter()
            .fold(0.0, |m, &t| m.max(self.eval(t).abs()))
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.truncation().max(other.truncation());
        let (a, b) = (self.resized(n), other.resized(n));
        ShapeCoeffs {
            dim: self.dim,
            cos: a.cos.iter().zip(&b.cos).map(|(x, y)| op(*x, *y)).collect(),
            sin: a.sin.iter().zip(&b.sin).map(|(x, y)| op(*x, *y)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        ShapeCoeffs {
            dim: self.dim,
            cos: self.cos.iter().map(|c| c * s).collect(),
            sin: self.sin.iter().map(|c| c * s).collect(),
        }
    }
}

/// Quadrature on `S^{N-1}` for functions of the polar angle.
///
/// `Σ w_i F(θ_i) ≈ ∫_{S^{N-1}} F`, the azimuthal factor `|S^{N-2}| sin^{N-2} θ`
/// already folded into the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(*t))
            .sum()
    }
}

/// Default node count: `max(64, 8K)` in the plane, `max(48, 6K)` Gauss nodes otherwise.
pub fn default_node_count(dim: usize, truncation: usize) -> usize {
    if dim == 2 {
        64.max(8 * truncation)
    } else {
        48.max(6 * truncation)
    }
}

/// Trapezoid rule on the circle, or Gauss–Gegenbauer in `cos θ` for `N ≥ 3`.
///
/// The Gegenbauer weight `(1 - t²)^{(N-3)/2}` is the exact surface density of
/// zonal functions, so the rule integrates zonal polynomials of degree `2n - 1`
/// exactly in every dimension.
pub fn quadrature(dim: usize, node_count: usize) -> QuadratureRule {
    assert!(node_count >= 4, "quadrature needs at least 4 nodes");
    assert!(dim >= 2);
    if dim == 2 {
        let h = 2.0 * std::f64::consts::PI / node_count as f64;
        return QuadratureRule {
            dim,
            nodes: (0..node_count).map(|i| i as f64 * h).collect(),
            weights: vec![h; node_count],
        };
    }
    let (t, w) = cached_gauss_gegenbauer(dim, node_count);
    let area = harmonics::sphere_area(dim);
    QuadratureRule {
        dim,
        nodes: t.iter().map(|t| t.acos()).collect(),
        weights: w.iter().map(|w| w * area).collect(),
    }
}

type GaussCache = Mutex<HashMap<(usize, usize), (Vec<f64>, Vec<f64>)>>;

fn cached_gauss_gegenbauer(dim: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<GaussCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&(dim, n)) {
        return hit.clone();
    }
    let rule = gauss_gegenbauer(dim, n);
    cache.lock().unwrap().insert((dim, n), rule.clone());
    rule
}

/// Nodes and probability weights (summing to 1) for the weight `(1 - t²)^{λ - 1/2}`,
/// `λ = (N - 2)/2`. Golub–Welsch start, Newton polish, Christoffel weights.
fn gauss_gegenbauer(dim: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let lam = (dim as f64 - 2.0) / 2.0;
    let beta = |k: usize| -> f64 {
        let k = k as f64;
        k * (k + 2.0 * lam - 1.0) / (4.0 * (k + lam) * (k + lam - 1.0))
    };
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = beta(k).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jac)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    nodes.sort_by(|a, b| b.partial_cmp(a).unwrap());

    // Orthonormal recurrence t p_k = sqrt(β_{k+1}) p_{k+1} + sqrt(β_k) p_{k-1}, p_0 = 1.
    let eval = |t: f64| -> (f64, f64, f64) {
        let (mut p0, mut p1) = (0.0, 1.0);
        let (mut d0, mut d1) = (0.0, 0.0);
        let mut sumsq = 1.0;
        for k in 0..n {
            let bk1 = beta(k + 1).sqrt();
            let bk = if k == 0 { 0.0 } else { beta(k).sqrt() };
            let p2 = (t * p1 - bk * p0) / bk1;
            let d2 = (p1 + t * d1 - bk * d0) / bk1;
            p0 = p1;
            p1 = p2;
            d0 = d1;
            d1 = d2;
            if k + 1 < n {
                sumsq += p1 * p1;
            }
        }
        (p1, d1, sumsq)
    };
    let mut weights = Vec::with_capacity(n);
    for t in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, d, _) = eval(*t);
            if d != 0.0 {
                *t -= p / d;
            }
        }
        weights.push(1.0 / eval(*t).2);
    }
    (nodes, weights)
}

/// A boundary `r = base_radius + perturbation(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub base_radius: f64,
    pub perturbation: ShapeCoeffs,
}

impl BoundaryCurve {
    /// Validates star-shapedness (`ρ > 0`) on the default grid.
    pub fn new(base_radius: f64, perturbation: ShapeCoeffs) -> Result<Self> {
        if !(base_radius > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "base radius must be positive, got {base_radius}"
            )));
        }
        let curve = BoundaryCurve {
            base_radius,
            perturbation,
        };
        let rule = curve.default_rule();
        if let Some(t) = rule.nodes.iter().find(|&&t| curve.radius_at(t) <= 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "radius function is not positive at θ = {t}"
            )));
        }
        Ok(curve)
    }

    pub fn ball(dim: usize, radius: f64) -> Self {
        BoundaryCurve {
            base_radius: radius,
            perturbation: ShapeCoeffs::zeros(dim, 0),
        }
    }

    pub fn dim(&self) -> usize {
        self.perturbation.dim()
    }

    pub fn default_rule(&self) -> QuadratureRule {
        quadrature(
            self.dim(),
            default_node_count(self.dim(), self.perturbation.truncation()),
        )
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        self.base_radius + self.perturbation.eval(theta)
    }

    /// `ρ`, `ρ'`, `ρ''` at `theta`.
    pub fn jet(&self, theta: f64) -> AngularJet {
        let mut j = self.perturbation.jet(theta);
        j.value += self.base_radius;
        j
    }

    /// Boundary point in the working plane.
    pub fn point(&self, theta: f64) -> [f64; 2] {
        let r = self.radius_at(theta);
        [r * theta.cos(), r * theta.sin()]
    }

    /// Unit outward normal in the working plane: `∇φ/|∇φ|` for `φ = r - ρ(θ)`.
    pub fn plane_normal(&self, theta: f64) -> [f64; 2] {
        let j = self.jet(theta);
        let (s, c) = theta.sin_cos();
        // r̂ - (ρ'/ρ) θ̂, scaled by ρ
        let nx = j.value * c + j.d1 * s;
        let ny = j.value * s - j.d1 * c;
        let len = nx.hypot(ny);
        [nx / len, ny / len]
    }

    /// Unit outward normal in `R^N` (zero azimuth for `N ≥ 3`).
    pub fn outward_normal(&self, theta: f64) -> Vec<f64> {
        let n = self.plane_normal(theta);
        let mut out = vec![0.0; self.dim()];
        out[0] = n[0];
        out[1] = n[1];
        out
    }

    /// Mean curvature, the tangential divergence of the outward normal
    /// (`(N-1)/ρ` on a sphere of radius `ρ`).
    pub fn mean_curvature(&self, theta: f64) -> f64 {
        let j = self.jet(theta);
        let (r, r1, r2) = (j.value, j.d1, j.d2);
        let q = r * r + r1 * r1;
        let meridian = (r * r + 2.0 * r1 * r1 - r * r2) / q.powf(1.5);
        if self.dim() == 2 {
            return meridian;
        }
        // parallel curvature of the surface of revolution; ρ' cot θ → ρ'' on the axis
        let s = theta.sin();
        let cot_term = if s.abs() < 1e-8 {
            r2
        } else {
            r1 * theta.cos() / s
        };
        let parallel = (1.0 - cot_term / r) / q.sqrt();
        meridian + (self.dim() as f64 - 2.0) * parallel
    }

    /// Surface element relative to the unit-sphere measure: `ρ^{N-2} sqrt(ρ² + ρ'²)`.
    pub fn area_factor(&self, theta: f64) -> f64 {
        let j = self.jet(theta);
        j.value.powi(self.dim() as i32 - 2) * j.value.hypot(j.d1)
    }

    pub fn volume_with(&self, rule: &QuadratureRule) -> f64 {
        let n = self.dim() as i32;
        rule.integrate(|t| self.radius_at(t).powi(n)) / n as f64
    }

    pub fn volume(&self) -> f64 {
        self.volume_with(&self.default_rule())
    }

    /// `∫_{∂Ω} F dS` for an integrand given as a function of the polar angle.
    pub fn surface_integral_with(
        &self,
        rule: &QuadratureRule,
        integrand: impl Fn(f64) -> f64,
    ) -> f64 {
        rule.integrate(|t| integrand(t) * self.area_factor(t))
    }

    pub fn surface_integral(&self, integrand: impl Fn(f64) -> f64) -> f64 {
        self.surface_integral_with(&self.default_rule(), integrand)
    }

    pub fn perimeter(&self) -> f64 {
        self.surface_integral(|_| 1.0)
    }

    /// Unnormalized barycenter `∫_Ω x`.
    pub fn barycenter_with(&self, rule: &QuadratureRule) -> Vec<f64> {
        let n = self.dim();
        let p = n as i32 + 1;
        let mut out = vec![0.0; n];
        out[0] = rule.integrate(|t| self.radius_at(t).powi(p) * t.cos()) / p as f64;
        if n == 2 {
            out[1] = rule.integrate(|t| self.radius_at(t).powi(p) * t.sin()) / p as f64;
        }
        out
    }

    pub fn barycenter(&self) -> Vec<f64> {
        self.barycenter_with(&self.default_rule())
    }
}

/// Exact radius function of the ball `offset + B_base` seen from the origin.
pub fn translated_ball_radius(dim: usize, offset: &[f64], base_radius: f64, theta: f64) -> f64 {
    let dir = if dim == 2 {
        [theta.cos(), theta.sin()]
    } else {
        [theta.cos(), 0.0]
    };
    let yn = offset[0] * dir[0] + offset.get(1).copied().unwrap_or(0.0) * dir[1];
    let y2: f64 = offset.iter().map(|v| v * v).sum();
    yn + (base_radius * base_radius - y2 + yn * yn).sqrt()
}

/// A translated ball written as a graph over the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedBall {
    /// Mean-free part of `ρ`.
    pub shape: ShapeCoeffs,
    /// Surface mean of `ρ`; the boundary is `r = mean + shape(θ)` up to truncation.
    pub mean: f64,
    pub radius: f64,
}

fn check_offset(dim: usize, offset: &[f64], base_radius: f64) -> Result<()> {
    if offset.len() != dim {
        return Err(Error::param("offset", format!("expected {dim} components")));
    }
    if dim >= 3 && offset[1..].iter().any(|&v| v != 0.0) {
        return Err(Error::param(
            "offset",
            "only offsets along the x_1 axis are zonal",
        ));
    }
    let norm = offset.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm >= base_radius {
        return Err(Error::param(
            "offset",
            "offset must be smaller than the radius",
        ));
    }
    Ok(())
}

/// Project the translated-ball radius function onto degrees `1..=truncation`,
/// reporting its (nonzero) mean separately.
pub fn translated_ball_graph(
    dim: usize,
    offset: &[f64],
    base_radius: f64,
    truncation: usize,
) -> Result<TranslatedBall> {
    check_offset(dim, offset, base_radius)?;
    let rule = quadrature(
        dim,
        default_node_count(dim, truncation).max(4 * truncation + 4),
    );
    let values: Vec<f64> = rule
        .nodes
        .iter()
        .map(|&t| translated_ball_radius(dim, offset, base_radius, t))
        .collect();
    let (shape, mean) = harmonics::analyze(&values, &rule, truncation)?;
    Ok(TranslatedBall {
        shape,
        mean,
        radius: base_radius,
    })
}

/// The translated ball whose graph has mean exactly 1, i.e. the zero-mean `g`
/// with `Ω_g = offset + B_radius` for the appropriate radius.
pub fn zero_mean_translated_ball(
    dim: usize,
    offset: &[f64],
    truncation: usize,
) -> Result<TranslatedBall> {
    let mut radius = 1.0;
    for _ in 0..50 {
        let tb = translated_ball_graph(dim, offset, radius, truncation)?;
        let defect = 1.0 - tb.mean;
        if defect.abs() < 1e-15 {
            return Ok(tb);
        }
        radius += defect;
    }
    translated_ball_graph(dim, offset, radius, truncation)
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
