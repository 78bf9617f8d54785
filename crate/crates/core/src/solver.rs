//! Transmission-problem solver: `-div(σ∇u) = 1` in `Ω_g`, `u = 0` on `∂Ω_g`,
//! with `[u] = [σ∂_n u] = 0` across `∂D_f`.
//!
//! Each phase carries a particular solution plus a truncated harmonic
//! expansion, so the PDE holds identically and only the interface and
//! Dirichlet conditions are fitted, by least squares at collocation nodes.
//!
//! All evaluation happens in a working plane. In dimension 2 that is the
//! plane itself; for `N ≥ 3` it is the meridian half-plane `(x_1, |x'|)`,
//! and the full Hessian is rebuilt from the planar one plus the hoop term
//! `u_s / s`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, ProblemParams, ShapeCoeffs};

/// Default fraction of the interface gap a shape may occupy.
pub const AMPLITUDE_GUARD: f64 = 0.3;

/// Residual level above which a solution is flagged.
pub const RESIDUAL_WARNING: f64 = 1e-8;

/// Truncation and collocation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discretization {
    /// Largest harmonic degree in each expansion.
    pub truncation: usize,
    /// Collocation nodes per interface.
    pub collocation: usize,
    /// Relative singular-value threshold below which the system is rejected.
    pub rank_tol: f64,
}

impl Discretization {
    pub fn new(dim: usize, truncation: usize) -> Self {
        let collocation = if dim == 2 {
            64.max(4 * (truncation + 1))
        } else {
            48.max(3 * (truncation + 1))
        };
        Discretization {
            truncation,
            collocation,
            rank_tol: 1e-14,
        }
    }

    pub fn with_collocation(mut self, collocation: usize) -> Self {
        self.collocation = collocation;
        self
    }

    /// Requires at least two nodes per unknown of each condition block.
    pub fn validate(&self) -> Result<()> {
        if self.collocation < 2 * (self.truncation + 1) {
            return Err(Error::param(
                "collocation",
                format!(
                    "need at least {} nodes for truncation {}",
                    2 * (self.truncation + 1),
                    self.truncation
                ),
            ));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::param("rank_tol", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Value, gradient, Hessian and hoop term `u_s / s` of a function in the working plane.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlaneJet {
    pub value: f64,
    pub grad: [f64; 2],
    /// `[u_xx, u_xy, u_yy]`.
    pub hess: [f64; 3],
    pub hoop: f64,
}

impl PlaneJet {
    fn axpy(&mut self, a: f64, other: &PlaneJet) {
        self.value += a * other.value;
        self.grad[0] += a * other.grad[0];
        self.grad[1] += a * other.grad[1];
        for i in 0..3 {
            self.hess[i] += a * other.hess[i];
        }
        self.hoop += a * other.hoop;
    }

    pub fn normal_derivative(&self, n: [f64; 2]) -> f64 {
        self.grad[0] * n[0] + self.grad[1] * n[1]
    }

    /// `n · D²u · n` for an in-plane unit vector.
    pub fn second_directional(&self, n: [f64; 2]) -> f64 {
        self.hess[0] * n[0] * n[0] + 2.0 * self.hess[1] * n[0] * n[1] + self.hess[2] * n[1] * n[1]
    }

    pub fn laplacian(&self, dim: usize) -> f64 {
        self.hess[0] + self.hess[2] + (dim as f64 - 2.0) * self.hoop
    }
}

/// `-|x|² / (2Nσ)`.
fn particular_jet(dim: usize, sigma: f64, p: [f64; 2]) -> PlaneJet {
    let c = 1.0 / (dim as f64 * sigma);
    PlaneJet {
        value: -0.5 * c * (p[0] * p[0] + p[1] * p[1]),
        grad: [-c * p[0], -c * p[1]],
        hess: [-c, 0.0, -c],
        hoop: if dim == 2 { 0.0 } else { -c },
    }
}

/// Jets of `Re h`, `Im h` for a holomorphic `h` given `h, h', h''`.
fn holomorphic_jets(h: [Complex64; 3]) -> (PlaneJet, PlaneJet) {
    let [f, f1, f2] = h;
    let re = PlaneJet {
        value: f.re,
        grad: [f1.re, -f1.im],
        hess: [f2.re, -f2.im, -f2.re],
        hoop: 0.0,
    };
    let im = PlaneJet {
        value: f.im,
        grad: [f1.im, f1.re],
        hess: [f2.im, f2.re, -f2.im],
        hoop: 0.0,
    };
    (re, im)
}

/// Derivatives of a function of `(x_1, q = s²)`.
#[derive(Debug, Clone, Copy, Default)]
struct QJet {
    v: f64,
    d1: f64,
    dq: f64,
    d11: f64,
    d1q: f64,
    dqq: f64,
}

impl QJet {
    fn to_plane(self, s: f64) -> PlaneJet {
        PlaneJet {
            value: self.v,
            grad: [self.d1, 2.0 * s * self.dq],
            hess: [
                self.d11,
                2.0 * s * self.d1q,
                2.0 * self.dq + 4.0 * s * s * self.dqq,
            ],
            hoop: 2.0 * self.dq,
        }
    }

    fn product(a: &QJet, b: &QJet) -> QJet {
        QJet {
            v: a.v * b.v,
            d1: a.d1 * b.v + a.v * b.d1,
            dq: a.dq * b.v + a.v * b.dq,
            d11: a.d11 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d11,
            d1q: a.d1q * b.v + a.d1 * b.dq + a.dq * b.d1 + a.v * b.d1q,
            dqq: a.dqq * b.v + 2.0 * a.dq * b.dq + a.v * b.dqq,
        }
    }
}

/// Solid zonal harmonics `r^k P̃_k(x_1/r)` for `k = 0..=kmax`, by the
/// three-term recurrence in `(x_1, q)`.
fn solid_zonal(dim: usize, kmax: usize, x1: f64, q: f64) -> Vec<QJet> {
    let n = dim as f64;
    let w = x1 * x1 + q;
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(QJet {
        v: 1.0,
        ..Default::default()
    });
    if kmax >= 1 {
        out.push(QJet {
            v: x1,
            d1: 1.0,
            ..Default::default()
        });
    }
    for k in 1..kmax {
        let kf = k as f64;
        let c1 = (2.0 * kf + n - 2.0) / (kf + n - 2.0);
        let c2 = kf / (kf + n - 2.0);
        let z = out[k];
        let y = out[k - 1];
        out.push(QJet {
            v: c1 * x1 * z.v - c2 * w * y.v,
            d1: c1 * (z.v + x1 * z.d1) - c2 * (2.0 * x1 * y.v + w * y.d1),
            dq: c1 * x1 * z.dq - c2 * (y.v + w * y.dq),
            d11: c1 * (2.0 * z.d1 + x1 * z.d11) - c2 * (2.0 * y.v + 4.0 * x1 * y.d1 + w * y.d11),
            d1q: c1 * (z.dq + x1 * z.d1q) - c2 * (2.0 * x1 * y.dq + y.d1 + w * y.d1q),
            dqq: c1 * x1 * z.dqq - c2 * (2.0 * y.dq + w * y.dqq),
        });
    }
    out
}

/// `w^p` with `w = x_1² + q`.
fn radial_power(x1: f64, q: f64, p: f64) -> QJet {
    let w = x1 * x1 + q;
    let wp = w.powf(p);
    let a = p * wp / w;
    let b = p * (p - 1.0) * wp / (w * w);
    QJet {
        v: wp,
        d1: 2.0 * x1 * a,
        dq: a,
        d11: 2.0 * a + 4.0 * x1 * x1 * b,
        d1q: 2.0 * x1 * b,
        dqq: b,
    }
}

/// Harmonic basis jets at a working-plane point, indexed by degree `0..=kmax`.
///
/// Returns `(cos-or-zonal, sin)`; the sine list is empty for `N ≥ 3` and its
/// degree-0 entry is zero in the plane. Growing members are `r^k Y_k`; decaying
/// members are `r^{2-N-k} Y_k`, with `log r` (plane) or `r^{2-N}` at degree 0.
pub fn harmonic_jets(
    dim: usize,
    kmax: usize,
    p: [f64; 2],
    decaying: bool,
) -> (Vec<PlaneJet>, Vec<PlaneJet>) {
    if dim == 2 {
        let z = Complex64::new(p[0], p[1]);
        let mut cos = Vec::with_capacity(kmax + 1);
        let mut sin = Vec::with_capacity(kmax + 1);
        if decaying {
            let wz = z.inv();
            let (re, _) = holomorphic_jets([Complex64::new(z.norm().ln(), z.arg()), wz, -wz * wz]);
            cos.push(re);
            sin.push(PlaneJet::default());
            let mut pw = wz;
            for k in 1..=kmax {
                let kf = k as f64;
                // h = z^{-k}, h' = -k z^{-k-1}, h'' = k(k+1) z^{-k-2}
                let (re, im) =
                    holomorphic_jets([pw, -kf * pw * wz, kf * (kf + 1.0) * pw * wz * wz]);
                cos.push(re);
                sin.push(im);
                pw *= wz;
            }
        } else {
            let mut pows = vec![Complex64::new(1.0, 0.0); kmax + 1];
            for k in 1..=kmax {
                pows[k] = pows[k - 1] * z;
            }
            for k in 0..=kmax {
                let kf = k as f64;
                let d1 = if k >= 1 {
                    kf * pows[k - 1]
                } else {
                    Complex64::default()
                };
                let d2 = if k >= 2 {
                    kf * (kf - 1.0) * pows[k - 2]
                } else {
                    Complex64::default()
                };
                let (re, im) = holomorphic_jets([pows[k], d1, d2]);
                cos.push(re);
                sin.push(im);
            }
        }
        return (cos, sin);
    }
    let (x1, s) = (p[0], p[1].abs());
    let q = s * s;
    let zonal = solid_zonal(dim, kmax, x1, q);
    let jets = if decaying {
        let n = dim as f64;
        zonal
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let g = radial_power(x1, q, (2.0 - n - 2.0 * k as f64) / 2.0);
                QJet::product(&g, z).to_plane(s)
            })
            .collect()
    } else {
        zonal.iter().map(|z| z.to_plane(s)).collect()
    };
    (jets, Vec::new())
}

/// Expansion coefficients of one harmonic family set, indexed by degree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expansion {
    pub cos: Vec<f64>,
    /// Empty for `N ≥ 3`.
    pub sin: Vec<f64>,
}

impl Expansion {
    fn zeros(dim: usize, truncation: usize) -> Self {
        Expansion {
            cos: vec![0.0; truncation + 1],
            sin: if dim == 2 {
                vec![0.0; truncation + 1]
            } else {
                Vec::new()
            },
        }
    }

    fn accumulate(&self, jet: &mut PlaneJet, cos: &[PlaneJet], sin: &[PlaneJet]) {
        for (c, b) in self.cos.iter().zip(cos) {
            jet.axpy(*c, b);
        }
        for (c, b) in self.sin.iter().zip(sin) {
            jet.axpy(*c, b);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// The core `D_f`.
    Inner,
    /// The shell `Ω_g \ D_f` (the whole domain when there is no core).
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Inner,
    Growing,
    Decaying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Column {
    region: Region,
    k: usize,
    sine: bool,
}

/// Column-scaled collocation system.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Divide a solution entry by its scale to get the expansion coefficient.
    pub column_scales: Vec<f64>,
    columns: Vec<Column>,
}

/// Sup-norm defects on the verification grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub value_jump: f64,
    pub flux_jump: f64,
    pub dirichlet: f64,
    pub max: f64,
    pub warning: bool,
}

/// A solved transmission problem, evaluable in closed form.
#[derive(Debug, Clone)]
pub struct SpectralSolution {
    pub params: ProblemParams,
    pub discretization: Discretization,
    /// `∂D_f`; absent without a core.
    pub inner_curve: Option<BoundaryCurve>,
    /// `∂Ω_g`.
    pub outer_curve: BoundaryCurve,
    pub inner: Expansion,
    pub outer_growing: Expansion,
    pub outer_decaying: Expansion,
    pub residual: ResidualReport,
}

fn check_shapes(
    params: &ProblemParams,
    f: &ShapeCoeffs,
    g: &ShapeCoeffs,
) -> Result<(Option<BoundaryCurve>, BoundaryCurve)> {
    if f.dim() != params.dim || g.dim() != params.dim {
        return Err(Error::param(
            "shape",
            "shape dimension does not match the problem",
        ));
    }
    let gap = 1.0 - params.core_radius;
    let limit = AMPLITUDE_GUARD * gap;
    if g.sup_norm() >= limit {
        return Err(Error::InvalidGeometry(format!(
            "outer perturbation sup-norm {:.3e} exceeds the guard {limit:.3e}",
            g.sup_norm()
        )));
    }
    let outer = BoundaryCurve::new(1.0, g.clone())?;
    if params.is_one_phase() {
        if !f.is_zero() {
            return Err(Error::InvalidGeometry(
                "a core perturbation needs a core (R > 0)".into(),
            ));
        }
        return Ok((None, outer));
    }
    if f.sup_norm() >= limit {
        return Err(Error::InvalidGeometry(format!(
            "core perturbation sup-norm {:.3e} exceeds the guard {limit:.3e}",
            f.sup_norm()
        )));
    }
    let inner = BoundaryCurve::new(params.core_radius, f.clone())?;
    for t in verification_angles(params.dim, 4 * default_check_nodes(f, g)) {
        if inner.radius_at(t) >= outer.radius_at(t) {
            return Err(Error::InvalidGeometry(format!(
                "interfaces touch or cross at θ = {t}"
            )));
        }
    }
    Ok((Some(inner), outer))
}

fn default_check_nodes(f: &ShapeCoeffs, g: &ShapeCoeffs) -> usize {
    64.max(8 * f.truncation().max(g.truncation()))
}

/// Collocation angles: uniform on the circle, midpoint rule in `θ ∈ (0, π)` otherwise.
fn collocation_angles(dim: usize, m: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    if dim == 2 {
        (0..m).map(|i| 2.0 * pi * i as f64 / m as f64).collect()
    } else {
        (0..m).map(|i| pi * (i as f64 + 0.5) / m as f64).collect()
    }
}

/// Verification angles, interleaved with the collocation nodes and including the poles.
fn verification_angles(dim: usize, m: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    if dim == 2 {
        (0..m)
            .map(|i| 2.0 * pi * (i as f64 + 0.5) / m as f64)
            .collect()
    } else {
        (0..=m).map(|i| pi * i as f64 / m as f64).collect()
    }
}

fn build_columns(
    params: &ProblemParams,
    truncation: usize,
    period: usize,
    with_sine: bool,
) -> Vec<Column> {
    let mut regions = vec![Region::Growing];
    if !params.is_one_phase() {
        regions.insert(0, Region::Inner);
        regions.push(Region::Decaying);
    }
    let mut cols = Vec::new();
    for region in regions {
        for k in (0..=truncation).filter(|&k| k == 0 || (period > 0 && k % period == 0)) {
            cols.push(Column {
                region,
                k,
                sine: false,
            });
            if with_sine && k >= 1 {
                cols.push(Column {
                    region,
                    k,
                    sine: true,
                });
            }
        }
    }
    cols
}

struct PointBasis {
    grow: (Vec<PlaneJet>, Vec<PlaneJet>),
    decay: Option<(Vec<PlaneJet>, Vec<PlaneJet>)>,
}

impl PointBasis {
    fn new(dim: usize, kmax: usize, p: [f64; 2], with_decay: bool) -> Self {
        PointBasis {
            grow: harmonic_jets(dim, kmax, p, false),
            decay: with_decay.then(|| harmonic_jets(dim, kmax, p, true)),
        }
    }

    fn column(&self, c: &Column) -> &PlaneJet {
        let fam = match c.region {
            Region::Inner | Region::Growing => &self.grow,
            Region::Decaying => self.decay.as_ref().expect("decaying basis requested"),
        };
        if c.sine {
            &fam.1[c.k]
        } else {
            &fam.0[c.k]
        }
    }
}

/// Collocation matrix for the interface and Dirichlet conditions.
pub fn assemble(
    params: &ProblemParams,
    f: &ShapeCoeffs,
    g: &ShapeCoeffs,
    disc: &Discretization,
) -> Result<LinearSystem> {
    disc.validate()?;
    let (inner, outer) = check_shapes(params, f, g)?;
    assemble_curves(params, inner.as_ref(), &outer, disc, f, g)
}

fn assemble_curves(
    params: &ProblemParams,
    inner: Option<&BoundaryCurve>,
    outer: &BoundaryCurve,
    disc: &Discretization,
    f: &ShapeCoeffs,
    g: &ShapeCoeffs,
) -> Result<LinearSystem> {
    let dim = params.dim;
    let kmax = disc.truncation;
    let with_sine = dim == 2 && !(f.is_reflection_symmetric() && g.is_reflection_symmetric());
    // In the plane a shared rotation period of f and g is inherited by u.
    let period = if dim == 2 {
        crate::geometry::gcd(f.rotation_period(), g.rotation_period())
    } else {
        1
    };
    let columns = build_columns(params, kmax, period, with_sine);
    let angles = collocation_angles(dim, disc.collocation);
    let two_phase = inner.is_some();
    let rows = angles.len() * if two_phase { 3 } else { 1 };
    let mut a = DMatrix::<f64>::zeros(rows, columns.len());
    let mut b = DVector::<f64>::zeros(rows);
    let mut row = 0;

    if let Some(inner) = inner {
        for &t in &angles {
            let p = inner.point(t);
            let n = inner.plane_normal(t);
            let basis = PointBasis::new(dim, kmax, p, true);
            let pin = particular_jet(dim, params.sigma, p);
            let pout = particular_jet(dim, 1.0, p);
            for (j, c) in columns.iter().enumerate() {
                let jet = basis.column(c);
                let (sv, sf) = match c.region {
                    Region::Inner => (1.0, params.sigma),
                    _ => (-1.0, -1.0),
                };
                a[(row, j)] = sv * jet.value;
                a[(row + 1, j)] = sf * jet.normal_derivative(n);
            }
            b[row] = -(pin.value - pout.value);
            b[row + 1] = -(params.sigma * pin.normal_derivative(n) - pout.normal_derivative(n));
            row += 2;
        }
    }
    for &t in &angles {
        let p = outer.point(t);
        let basis = PointBasis::new(dim, kmax, p, two_phase);
        for (j, c) in columns.iter().enumerate() {
            if c.region != Region::Inner {
                a[(row, j)] = basis.column(c).value;
            }
        }
        b[row] = -particular_jet(dim, 1.0, p).value;
        row += 1;
    }

    let mut scales = Vec::with_capacity(columns.len());
    for j in 0..columns.len() {
        let m = a.column(j).amax();
        let s = if m > 0.0 { 1.0 / m } else { 1.0 };
        a.column_mut(j).scale_mut(s);
        scales.push(s);
    }
    Ok(LinearSystem {
        matrix: a,
        rhs: b,
        column_scales: scales,
        columns,
    })
}

/// Solve the transmission problem on `(D_f, Ω_g)`.
pub fn solve_transmission(
    params: &ProblemParams,
    f: &ShapeCoeffs,
    g: &ShapeCoeffs,
    disc: &Discretization,
) -> Result<SpectralSolution> {
    disc.validate()?;
    let (inner, outer) = check_shapes(params, f, g)?;
    let sys = assemble_curves(params, inner.as_ref(), &outer, disc, f, g)?;
    let svd = sys.matrix.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smallest, largest) = (sv.min(), sv.max());
    if smallest < disc.rank_tol * largest {
        return Err(Error::RankDeficient { smallest, largest });
    }
    let x = svd
        .solve(&sys.rhs, 0.0)
        .map_err(|e| Error::InvalidParameter {
            field: "discretization".into(),
            reason: e.to_string(),
        })?;

    let dim = params.dim;
    let mut sol = SpectralSolution {
        params: *params,
        discretization: *disc,
        inner_curve: inner,
        outer_curve: outer,
        inner: Expansion::zeros(dim, disc.truncation),
        outer_growing: Expansion::zeros(dim, disc.truncation),
        outer_decaying: Expansion::zeros(dim, disc.truncation),
        residual: ResidualReport {
            value_jump: 0.0,
            flux_jump: 0.0,
            dirichlet: 0.0,
            max: 0.0,
            warning: false,
        },
    };
    for (j, c) in sys.columns.iter().enumerate() {
        let e = match c.region {
            Region::Inner => &mut sol.inner,
            Region::Growing => &mut sol.outer_growing,
            Region::Decaying => &mut sol.outer_decaying,
        };
        let v = x[j] * sys.column_scales[j];
        if c.sine {
            e.sin[c.k] = v;
        } else {
            e.cos[c.k] = v;
        }
    }
    sol.residual = sol.verify(4 * disc.collocation);
    Ok(sol)
}

impl SpectralSolution {
    pub fn dim(&self) -> usize {
        self.params.dim
    }

    fn verify(&self, m: usize) -> ResidualReport {
        let mut r = ResidualReport {
            value_jump: 0.0,
            flux_jump: 0.0,
            dirichlet: 0.0,
            max: 0.0,
            warning: false,
        };
        let angles = verification_angles(self.dim(), m);
        if let Some(inner) = &self.inner_curve {
            for &t in &angles {
                let p = inner.point(t);
                let n = inner.plane_normal(t);
                let a = self.phase_jet(Phase::Inner, p);
                let b = self.phase_jet(Phase::Outer, p);
                r.value_jump = r.value_jump.max((a.value - b.value).abs());
                let flux = self.params.sigma * a.normal_derivative(n) - b.normal_derivative(n);
                r.flux_jump = r.flux_jump.max(flux.abs());
            }
        }
        for &t in &angles {
            let v = self
                .phase_jet(Phase::Outer, self.outer_curve.point(t))
                .value;
            r.dirichlet = r.dirichlet.max(v.abs());
        }
        r.max = r.value_jump.max(r.flux_jump).max(r.dirichlet);
        r.warning = r.max > RESIDUAL_WARNING;
        r
    }

    /// Jet of the given phase's expansion at a working-plane point, without a
    /// domain check (the expansions extend smoothly across the interfaces).
    pub fn phase_jet(&self, phase: Phase, p: [f64; 2]) -> PlaneJet {
        let dim = self.dim();
        let kmax = self.discretization.truncation;
        match phase {
            Phase::Inner => {
                let mut jet = particular_jet(dim, self.params.sigma, p);
                let (c, s) = harmonic_jets(dim, kmax, p, false);
                self.inner.accumulate(&mut jet, &c, &s);
                jet
            }
            Phase::Outer => {
                let mut jet = particular_jet(dim, 1.0, p);
                let (c, s) = harmonic_jets(dim, kmax, p, false);
                self.outer_growing.accumulate(&mut jet, &c, &s);
                if self.inner_curve.is_some() {
                    let (c, s) = harmonic_jets(dim, kmax, p, true);
                    self.outer_decaying.accumulate(&mut jet, &c, &s);
                }
                jet
            }
        }
    }

    /// Conductivity of a phase.
    pub fn phase_sigma(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Inner => self.params.sigma,
            Phase::Outer => 1.0,
        }
    }

    fn to_plane(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.dim() {
            return Err(Error::param(
                "point",
                format!("expected {} coordinates", self.dim()),
            ));
        }
        if self.dim() == 2 {
            Ok([x[0], x[1]])
        } else {
            Ok([x[0], x[1..].iter().map(|v| v * v).sum::<f64>().sqrt()])
        }
    }

    fn polar_angle(&self, p: [f64; 2]) -> f64 {
        let t = p[1].atan2(p[0]);
        if self.dim() == 2 && t < 0.0 {
            t + 2.0 * std::f64::consts::PI
        } else {
            t
        }
    }

    /// Phase containing `x`, or an error when `x` lies outside `Ω_g`.
    pub fn locate(&self, x: &[f64]) -> Result<Phase> {
        let p = self.to_plane(x)?;
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            return Ok(if self.inner_curve.is_some() {
                Phase::Inner
            } else {
                Phase::Outer
            });
        }
        let t = self.polar_angle(p);
        if r > self.outer_curve.radius_at(t) * (1.0 + 1e-12) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        match &self.inner_curve {
            Some(c) if r < c.radius_at(t) => Ok(Phase::Inner),
            _ => Ok(Phase::Outer),
        }
    }

    fn jet_at(&self, x: &[f64]) -> Result<(PlaneJet, [f64; 2])> {
        let phase = self.locate(x)?;
        let p = self.to_plane(x)?;
        Ok((self.phase_jet(phase, p), p))
    }

    pub fn eval_u(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jet_at(x)?.0.value)
    }

    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (jet, p) = self.jet_at(x)?;
        if self.dim() == 2 {
            return Ok(jet.grad.to_vec());
        }
        let mut g = vec![0.0; self.dim()];
        g[0] = jet.grad[0];
        if p[1] > 0.0 {
            for i in 1..self.dim() {
                g[i] = jet.grad[1] * x[i] / p[1];
            }
        }
        Ok(g)
    }

    pub fn eval_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let (jet, p) = self.jet_at(x)?;
        let n = self.dim();
        let mut h = DMatrix::<f64>::zeros(n, n);
        h[(0, 0)] = jet.hess[0];
        if n == 2 {
            h[(0, 1)] = jet.hess[1];
            h[(1, 0)] = jet.hess[1];
            h[(1, 1)] = jet.hess[2];
            return Ok(h);
        }
        let s = p[1];
        for i in 1..n {
            let ui = if s > 0.0 { x[i] / s } else { 0.0 };
            h[(0, i)] = jet.hess[1] * ui;
            h[(i, 0)] = jet.hess[1] * ui;
            for j in 1..n {
                let uj = if s > 0.0 { x[j] / s } else { 0.0 };
                let delta = if i == j { 1.0 } else { 0.0 };
                h[(i, j)] = jet.hess[2] * ui * uj + jet.hoop * (delta - ui * uj);
            }
        }
        Ok(h)
    }
}
