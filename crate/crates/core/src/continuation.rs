//! Nonlinear solves for zeros of `Φ`: fixed-core solves in `g`, amplitude-constrained
//! branches through critical conductivities, and the barycenter-augmented
//! one-phase system.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{quadrature, BoundaryCurve, Kind, ProblemParams, ShapeCoeffs};
use crate::harmonics::{self, sphere_area};
use crate::overdet::{extract_d, phi_of, DEstimate};
use crate::radial::{self, DEFAULT_KMAX};
use crate::solver::{solve_transmission, Discretization, SpectralSolution};

/// Jacobian used for the first Newton steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMode {
    /// The exact linearization at the trivial pair, refreshed to a
    /// finite-difference Jacobian when contraction stalls.
    DiagonalBeta,
    FullFd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonConfig {
    /// Sup-norm target for the nodal residual.
    pub tol: f64,
    pub max_iter: usize,
    pub jacobian: JacobianMode,
    /// Central-difference step for Jacobian columns.
    pub fd_step: f64,
    /// Step length multiplier; 1 means undamped.
    pub damping: f64,
    /// Residual ratio above which the Jacobian is rebuilt.
    pub stall_ratio: f64,
    /// Refuse `σ` closer than this to an admissible critical value.
    pub sigma_margin: f64,
    /// State-solver settings.
    pub discretization: Discretization,
    /// Largest degree of the unknown boundary perturbation.
    pub modes: usize,
}

impl NewtonConfig {
    pub fn new(dim: usize, truncation: usize, modes: usize) -> Self {
        NewtonConfig {
            tol: 1e-9,
            max_iter: 25,
            jacobian: JacobianMode::DiagonalBeta,
            fd_step: 1e-6,
            damping: 1.0,
            stall_ratio: 0.25,
            sigma_margin: 1e-3,
            discretization: Discretization::new(dim, truncation),
            modes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.discretization.validate()?;
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        if self.modes == 0 {
            return Err(Error::param("modes", "need at least one unknown degree"));
        }
        if self.modes > self.discretization.truncation {
            return Err(Error::param("modes", "cannot exceed the solver truncation"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::param("damping", "must lie in (0, 1]"));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::param("fd_step", "must be positive"));
        }
        Ok(())
    }
}

/// A set of `(degree, kind)` modes: the coordinates of a subspace of perturbations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeSet {
    pub dim: usize,
    pub modes: Vec<(usize, Kind)>,
}

impl ModeSet {
    /// All modes of degree `1..=kmax`.
    pub fn full(dim: usize, kmax: usize) -> Self {
        Self::periodic(dim, kmax, 1, dim == 2)
    }

    /// Degrees that are multiples of `period`; sine modes only if `with_sine`.
    pub fn periodic(dim: usize, kmax: usize, period: usize, with_sine: bool) -> Self {
        let mut modes = Vec::new();
        for k in (period..=kmax).step_by(period.max(1)) {
            if dim == 2 {
                modes.push((k, Kind::Cos));
                if with_sine {
                    modes.push((k, Kind::Sin));
                }
            } else {
                modes.push((k, Kind::Zonal));
            }
        }
        ModeSet { dim, modes }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn project(&self, c: &ShapeCoeffs) -> Vec<f64> {
        self.modes.iter().map(|&(k, kind)| c.get(k, kind)).collect()
    }

    /// Adjoint of [`project`](Self::project).
    pub fn embed(&self, values: &[f64], truncation: usize) -> ShapeCoeffs {
        let mut c = ShapeCoeffs::zeros(self.dim, truncation);
        for (&(k, kind), &v) in self.modes.iter().zip(values) {
            c.set(k, kind, v);
        }
        c
    }

    pub fn position(&self, k: usize, kind: Kind) -> Option<usize> {
        self.modes.iter().position(|&m| m == (k, kind))
    }
}

/// Subspace invariant under the symmetries of `Y_k`: in the plane the cosine modes
/// whose degree is a multiple of `k`, and every zonal mode for `N ≥ 3`.
pub fn invariant_modes(dim: usize, k: usize, kmax: usize) -> ModeSet {
    if dim == 2 {
        ModeSet::periodic(2, kmax, k, false)
    } else {
        ModeSet::full(dim, kmax)
    }
}

/// Projection onto the invariant subspace of degree `k`.
pub fn symmetry_reduce(coeffs: &ShapeCoeffs, k: usize) -> ShapeCoeffs {
    let set = invariant_modes(coeffs.dim(), k.max(1), coeffs.truncation());
    set.embed(&set.project(coeffs), coeffs.truncation())
}

/// Largest rotation period shared by all nonzero modes, and whether any sine mode is present.
fn symmetry_of(shapes: &[&ShapeCoeffs]) -> (usize, bool) {
    let period = shapes
        .iter()
        .fold(0, |p, s| crate::geometry::gcd(p, s.rotation_period()));
    let sine = shapes.iter().any(|s| !s.is_reflection_symmetric());
    (period, sine)
}

struct Eval {
    eqs: Vec<f64>,
    metric: f64,
}

/// Outcome of a Newton solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Residual sup-norm before each step and after the last one.
    pub history: Vec<f64>,
    pub jacobian_rebuilds: usize,
}

fn fd_jacobian<F>(x: &[f64], eval: &F, steps: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Eval> + Sync,
{
    let cols: Vec<Result<Vec<f64>>> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += steps[i];
            xm[i] -= steps[i];
            let (fp, fm) = (eval(&xp)?, eval(&xm)?);
            Ok(fp
                .eqs
                .iter()
                .zip(&fm.eqs)
                .map(|(a, b)| (a - b) / (2.0 * steps[i]))
                .collect())
        })
        .collect();
    let mut jac = DMatrix::zeros(x.len(), x.len());
    for (i, col) in cols.into_iter().enumerate() {
        for (r, v) in col?.into_iter().enumerate() {
            jac[(r, i)] = v;
        }
    }
    Ok(jac)
}

/// Quasi-Newton on a square system. `diag` is the inverse-free diagonal
/// approximation; `steps` are the FD steps per unknown.
fn newton<F>(
    x0: Vec<f64>,
    eval: F,
    diag: &[f64],
    steps: &[f64],
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, NewtonReport)>
where
    F: Fn(&[f64]) -> Result<Eval> + Sync,
{
    let mut x = x0;
    let mut e = eval(&x)?;
    let mut report = NewtonReport {
        iterations: 0,
        history: vec![e.metric],
        jacobian_rebuilds: 0,
    };
    let mut lu = None;
    if cfg.jacobian == JacobianMode::FullFd {
        lu = Some(fd_jacobian(&x, &eval, steps)?.lu());
        report.jacobian_rebuilds += 1;
    }
    while e.metric > cfg.tol {
        if report.iterations == cfg.max_iter {
            return Err(Error::NoConvergence {
                iterations: report.iterations,
                history: report.history,
            });
        }
        let step: Vec<f64> = match &lu {
            Some(lu) => lu
                .solve(&DVector::from_column_slice(&e.eqs))
                .ok_or_else(|| Error::NoConvergence {
                    iterations: report.iterations,
                    history: report.history.clone(),
                })?
                .iter()
                .copied()
                .collect(),
            None => e.eqs.iter().zip(diag).map(|(r, d)| r / d).collect(),
        };
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi -= cfg.damping * si;
        }
        let next = eval(&x)?;
        report.iterations += 1;
        report.history.push(next.metric);
        if next.metric > cfg.stall_ratio * e.metric && next.metric > cfg.tol {
            lu = Some(fd_jacobian(&x, &eval, steps)?.lu());
            report.jacobian_rebuilds += 1;
        }
        e = next;
    }
    Ok((x, report))
}

fn check_sigma(params: &ProblemParams, cfg: &NewtonConfig) -> Result<()> {
    if params.is_one_phase() {
        return Err(Error::param(
            "core_radius",
            "the one-phase problem has translation modes; use the barycenter-augmented solve",
        ));
    }
    if radial::beta(1, params).abs() < 1e-8 {
        return Err(Error::param(
            "sigma",
            "sigma = 1 makes the degree-1 linearization singular",
        ));
    }
    for cv in radial::enumerate_sigma(params.dim, params.core_radius, DEFAULT_KMAX)? {
        let s = cv.s_k.unwrap_or(f64::NAN);
        if (params.sigma - s).abs() <= cfg.sigma_margin {
            return Err(Error::NearCritical {
                sigma: params.sigma,
                k: cv.k,
                s_k: s,
                margin: cfg.sigma_margin,
            });
        }
    }
    Ok(())
}

/// A converged zero of `Φ(f, ·, σ)`.
#[derive(Debug, Clone)]
pub struct GSolution {
    pub g: ShapeCoeffs,
    /// Nodal sup-norm of `Φ` at the solution.
    pub residual: f64,
    pub d: DEstimate,
    pub report: NewtonReport,
    pub state: SpectralSolution,
}

/// Find `g` with `Φ(f, g, σ) = 0`, starting from `initial` (zero if absent).
///
/// Unknowns are restricted to the modes sharing the rotation and reflection
/// symmetries of `f` and the initial guess.
pub fn solve_for_g(
    params: &ProblemParams,
    f: &ShapeCoeffs,
    initial: Option<&ShapeCoeffs>,
    cfg: &NewtonConfig,
) -> Result<GSolution> {
    cfg.validate()?;
    check_sigma(params, cfg)?;
    let dim = params.dim;
    let kg = cfg.modes;
    let zero = ShapeCoeffs::zeros(dim, kg);
    let start = initial.unwrap_or(&zero).resized(kg);
    let (period, sine) = symmetry_of(&[f, &start]);
    let set = if period == 0 {
        ModeSet {
            dim,
            modes: Vec::new(),
        }
    } else {
        ModeSet::periodic(dim, kg, period, sine)
    };
    let disc = cfg.discretization;
    let eval = |x: &[f64]| -> Result<Eval> {
        let g = set.embed(x, kg);
        let sol = solve_transmission(params, f, &g, &disc)?;
        let r = phi_of(&sol, kg)?;
        Ok(Eval {
            eqs: set.project(&r.modes),
            metric: r.sup_norm,
        })
    };
    let diag: Vec<f64> = set
        .modes
        .iter()
        .map(|&(k, _)| radial::beta(k, params))
        .collect();
    let steps = vec![cfg.fd_step; set.len()];
    let (x, report) = newton(set.project(&start), eval, &diag, &steps, cfg)?;
    let g = set.embed(&x, kg);
    let state = solve_transmission(params, f, &g, &disc)?;
    let r = phi_of(&state, kg)?;
    Ok(GSolution {
        d: extract_d(&state)?,
        residual: r.sup_norm,
        g,
        report,
        state,
    })
}

/// One converged point of a bifurcation branch.
#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub eps: f64,
    pub sigma: f64,
    /// `σ(ε) - s_k`.
    pub lambda: f64,
    pub g: ShapeCoeffs,
    pub residual: f64,
    pub d: f64,
    pub iterations: usize,
}

/// A traced branch; `failure` holds the amplitude and error that stopped it early.
#[derive(Debug, Clone)]
pub struct Branch {
    pub k: usize,
    pub s_k: f64,
    pub points: Vec<BranchPoint>,
    pub failure: Option<(f64, Error)>,
}

/// Trace the branch leaving `(B_R, B_1)` at `σ = s_k` along `Y_k`, with amplitude
/// constraint `coefficient_k(g) = ε` on the invariant subspace of `Y_k`.
pub fn trace_branch(
    dim: usize,
    radius: f64,
    k: usize,
    schedule: &[f64],
    cfg: &NewtonConfig,
) -> Result<Branch> {
    cfg.validate()?;
    let cv = radial::critical_value(k, dim, radius)?;
    let Some(s_k) = cv.s_k else {
        return Err(Error::Inadmissible { k, dim, radius });
    };
    if k > cfg.modes {
        return Err(Error::param(
            "modes",
            "the branch degree exceeds the mode truncation",
        ));
    }
    let kind = if dim == 2 { Kind::Cos } else { Kind::Zonal };
    let set = invariant_modes(dim, k, cfg.modes);
    let pivot = set.position(k, kind).expect("degree k is invariant");
    let mut branch = Branch {
        k,
        s_k,
        points: Vec::new(),
        failure: None,
    };
    let mut prev_sigma = s_k;
    let mut prev_g: Option<(f64, ShapeCoeffs)> = None;
    for &eps in schedule {
        if eps == 0.0 {
            branch.points.push(BranchPoint {
                eps,
                sigma: s_k,
                lambda: 0.0,
                g: ShapeCoeffs::zeros(dim, cfg.modes),
                residual: 0.0,
                d: radial::trivial_d(&ProblemParams::new(dim, radius, s_k)?),
                iterations: 0,
            });
            continue;
        }
        match branch_point(
            dim,
            radius,
            k,
            eps,
            &set,
            pivot,
            prev_sigma,
            prev_g.as_ref(),
            cfg,
        ) {
            Ok(p) => {
                prev_sigma = p.sigma;
                prev_g = Some((eps, p.g.clone()));
                branch.points.push(BranchPoint {
                    lambda: p.sigma - s_k,
                    ..p
                });
            }
            Err(e) => {
                branch.failure = Some((eps, e));
                break;
            }
        }
    }
    Ok(branch)
}

#[allow(clippy::too_many_arguments)]
fn branch_point(
    dim: usize,
    radius: f64,
    k: usize,
    eps: f64,
    set: &ModeSet,
    pivot: usize,
    sigma0: f64,
    prev: Option<&(f64, ShapeCoeffs)>,
    cfg: &NewtonConfig,
) -> Result<BranchPoint> {
    let kg = cfg.modes;
    let disc = cfg.discretization;
    let f = ShapeCoeffs::zeros(dim, 0);
    // unknown vector: the invariant modes with σ in the pivot slot
    let unpack = |x: &[f64]| -> Result<(ProblemParams, ShapeCoeffs)> {
        let mut v = x.to_vec();
        let sigma = v[pivot];
        v[pivot] = eps;
        Ok((ProblemParams::new(dim, radius, sigma)?, set.embed(&v, kg)))
    };
    let eval = |x: &[f64]| -> Result<Eval> {
        let (params, g) = unpack(x)?;
        let sol = solve_transmission(&params, &f, &g, &disc)?;
        let r = phi_of(&sol, kg)?;
        Ok(Eval {
            eqs: set.project(&r.modes),
            metric: r.sup_norm,
        })
    };
    let mut x0 = match prev {
        Some((e0, g0)) => set.project(&g0.scale(eps / e0)),
        None => vec![0.0; set.len()],
    };
    x0[pivot] = sigma0;
    let params0 = ProblemParams::new(dim, radius, sigma0)?;
    let dbeta = {
        let h = 1e-6 * sigma0.max(1.0);
        (radial::beta(k, &params0.with_sigma(sigma0 + h))
            - radial::beta(k, &params0.with_sigma(sigma0 - h)))
            / (2.0 * h)
    };
    let diag: Vec<f64> = set
        .modes
        .iter()
        .enumerate()
        .map(|(i, &(j, _))| {
            if i == pivot {
                eps * dbeta
            } else {
                radial::beta(j, &params0)
            }
        })
        .collect();
    let mut steps = vec![cfg.fd_step; set.len()];
    steps[pivot] = cfg.fd_step * sigma0.max(1.0);
    let (x, report) = newton(x0, eval, &diag, &steps, cfg)?;
    let (params, g) = unpack(&x)?;
    let sol = solve_transmission(&params, &f, &g, &disc)?;
    let r = phi_of(&sol, kg)?;
    Ok(BranchPoint {
        eps,
        sigma: params.sigma,
        lambda: 0.0,
        g,
        residual: r.sup_norm,
        d: extract_d(&sol)?.integral,
        iterations: report.iterations,
    })
}

/// `∂ Bar / ∂ g_1` for a unit-peak degree-1 mode on the unit sphere: `|S^{N-1}| / N`.
pub fn barycenter_derivative(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

/// Unknowns and equations of the augmented one-phase system: the degree-1 modes
/// (matched against the barycenter components) followed by the degree `≥ 2` modes.
fn augmented_modes(dim: usize, kmax: usize) -> ModeSet {
    ModeSet::full(dim, kmax)
}

fn barycenter_rule(dim: usize, kmax: usize) -> crate::geometry::QuadratureRule {
    let n = crate::geometry::default_node_count(dim, kmax).max((dim + 2) * kmax + 8);
    quadrature(dim, n)
}

/// `(Bar Ω_g - y, Q Φ(g))` in mode coordinates, with the nodal sup of both parts.
fn augmented_eval(y: &[f64], g: &ShapeCoeffs, set: &ModeSet, cfg: &NewtonConfig) -> Result<Eval> {
    let dim = g.dim();
    let kg = cfg.modes;
    let params = ProblemParams::one_phase(dim)?;
    let sol = solve_transmission(&params, &ShapeCoeffs::zeros(dim, 0), g, &cfg.discretization)?;
    let r = phi_of(&sol, kg)?;
    let bar = BoundaryCurve::new(1.0, g.clone())?.barycenter_with(&barycenter_rule(dim, kg));
    let mut eqs = set.project(&r.modes);
    let mut metric: f64 = 0.0;
    for (i, &(k, kind)) in set.modes.iter().enumerate() {
        if k == 1 {
            let comp = if kind == Kind::Sin { 1 } else { 0 };
            eqs[i] = bar[comp] - y[comp];
            metric = metric.max(eqs[i].abs());
        }
    }
    // Q Φ at the nodes: remove the mean and the degree-1 part
    let mut deg1 = ShapeCoeffs::zeros(dim, 1);
    for kind in deg1.kinds() {
        deg1.set(1, *kind, r.modes.get(1, *kind));
    }
    let q_sup = r
        .angles
        .iter()
        .zip(&r.nodal)
        .map(|(&t, v)| (v - r.mean - deg1.eval(t)).abs())
        .fold(0.0, f64::max);
    Ok(Eval {
        eqs,
        metric: metric.max(q_sup),
    })
}

/// Largest normalized barycenter offset `|y| / |B_1|` accepted by the augmented solve
/// (0.05 with a little slack for the radius correction of translated balls).
pub const MAX_AUGMENTED_OFFSET: f64 = 0.0505;

/// Result of the barycenter-augmented solve.
#[derive(Debug, Clone)]
pub struct AugmentedSolution {
    pub g: ShapeCoeffs,
    pub residual: f64,
    pub barycenter: Vec<f64>,
    pub report: NewtonReport,
}

/// One-phase solve of `Bar(Ω_g) = y`, `(Id - Π_1) Φ(g) = 0` for `g`, where `Bar`
/// is the unnormalized barycenter `∫_Ω x`.
pub fn one_phase_augmented_solve(
    dim: usize,
    y: &[f64],
    cfg: &NewtonConfig,
) -> Result<AugmentedSolution> {
    cfg.validate()?;
    let want = if dim == 2 { 2 } else { 1 };
    if y.len() < want || y.len() > dim || y[want..].iter().any(|&v| v != 0.0) {
        return Err(Error::param(
            "y",
            if dim == 2 {
                "expected a planar vector".to_string()
            } else {
                "only targets on the x_1 axis are axisymmetric".to_string()
            },
        ));
    }
    // offset of the target relative to the unit ball, |y| / |B_1|
    let offset = y.iter().map(|v| v * v).sum::<f64>().sqrt() / (sphere_area(dim) / dim as f64);
    if offset > MAX_AUGMENTED_OFFSET {
        return Err(Error::param(
            "y",
            "barycenter target is outside the perturbative range",
        ));
    }
    let kg = cfg.modes;
    let set = augmented_modes(dim, kg);
    let eval = |x: &[f64]| augmented_eval(y, &set.embed(x, kg), &set, cfg);
    let diag: Vec<f64> = set
        .modes
        .iter()
        .map(|&(k, _)| {
            if k == 1 {
                barycenter_derivative(dim)
            } else {
                (k * (k - 1)) as f64 / dim as f64
            }
        })
        .collect();
    let steps = vec![cfg.fd_step; set.len()];
    let (x, report) = newton(vec![0.0; set.len()], eval, &diag, &steps, cfg)?;
    let g = set.embed(&x, kg);
    let barycenter = BoundaryCurve::new(1.0, g.clone())?.barycenter_with(&barycenter_rule(dim, kg));
    Ok(AugmentedSolution {
        residual: *report.history.last().unwrap(),
        g,
        barycenter,
        report,
    })
}

/// Central-difference Jacobian of the augmented one-phase system at `g`, in the
/// mode order of [`ModeSet::full`].
pub fn augmented_jacobian(g: &ShapeCoeffs, cfg: &NewtonConfig) -> Result<(ModeSet, DMatrix<f64>)> {
    cfg.validate()?;
    let dim = g.dim();
    let set = augmented_modes(dim, cfg.modes);
    let y = vec![0.0; dim];
    let eval = |x: &[f64]| augmented_eval(&y, &set.embed(x, cfg.modes), &set, cfg);
    let steps = vec![cfg.fd_step; set.len()];
    let jac = fd_jacobian(&set.project(g), &eval, &steps)?;
    Ok((set, jac))
}

/// Zero-mean random perturbation with the given sup-norm, for restart probes.
pub fn random_perturbation(dim: usize, kmax: usize, sup: f64, seed: u64) -> ShapeCoeffs {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let set = ModeSet::full(dim, kmax);
    let values: Vec<f64> = (0..set.len())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let c = set.embed(&values, kmax);
    let rule = quadrature(dim, crate::geometry::default_node_count(dim, kmax));
    let peak = harmonics::synthesize(&c, &rule.nodes)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    c.scale(sup / peak)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(dim: usize, modes: &[(usize, Kind, f64)]) -> ShapeCoeffs {
        ShapeCoeffs::from_modes(dim, modes, 0).unwrap()
    }

    #[test]
    fn symmetry_reduction_examples() {
        let c = shape(
            2,
            &[
                (2, Kind::Cos, 1.0),
                (2, Kind::Sin, 1.0),
                (3, Kind::Cos, 1.0),
                (4, Kind::Cos, 1.0),
            ],
        );
        let r = symmetry_reduce(&c, 2);
        assert_eq!(r.get(2, Kind::Cos), 1.0);
        assert_eq!(r.get(2, Kind::Sin), 0.0);
        assert_eq!(r.get(3, Kind::Cos), 0.0);
        assert_eq!(r.get(4, Kind::Cos), 1.0);
        let z = shape(3, &[(1, Kind::Zonal, 0.5), (3, Kind::Zonal, 1.0)]);
        assert_eq!(symmetry_reduce(&z, 2), z);
        let set = invariant_modes(2, 3, 10);
        assert_eq!(
            set.modes,
            vec![(3, Kind::Cos), (6, Kind::Cos), (9, Kind::Cos)]
        );
        let v = set.project(&c);
        assert_eq!(set.project(&set.embed(&v, 10)), v);
    }

    #[test]
    fn reduced_subspace_is_invariant_under_phi() {
        let p = ProblemParams::new(2, 0.8, 3.0).unwrap();
        let g = shape(2, &[(2, Kind::Cos, 0.03), (4, Kind::Cos, 0.01)]);
        let z = ShapeCoeffs::zeros(2, 0);
        let sol = solve_transmission(&p, &z, &g, &Discretization::new(2, 32)).unwrap();
        let r = phi_of(&sol, 16).unwrap();
        let reduced = symmetry_reduce(&r.modes, 2);
        assert!(r.modes.sub(&reduced).max_abs() < 1e-8);
    }

    #[test]
    fn trivial_fixed_point() {
        let p = ProblemParams::new(2, 0.5, 2.0).unwrap();
        let cfg = NewtonConfig::new(2, 16, 8);
        let s = solve_for_g(&p, &ShapeCoeffs::zeros(2, 3), None, &cfg).unwrap();
        assert_eq!(s.report.iterations, 0);
        assert!(s.g.is_zero());
        assert!((s.d.integral - 0.5).abs() < 1e-12);
    }

    #[test]
    fn near_critical_refused() {
        let s2 = radial::critical_value(2, 2, 0.8).unwrap().s_k.unwrap();
        let p = ProblemParams::new(2, 0.8, s2 + 5e-4).unwrap();
        let cfg = NewtonConfig::new(2, 16, 8);
        let f = shape(2, &[(2, Kind::Cos, 0.01)]);
        assert!(matches!(
            solve_for_g(&p, &f, None, &cfg),
            Err(Error::NearCritical { k: 2, .. })
        ));
        let one = ProblemParams::one_phase(2).unwrap();
        assert!(solve_for_g(&one, &ShapeCoeffs::zeros(2, 0), None, &cfg).is_err());
        assert!(matches!(
            trace_branch(2, 0.5, 2, &[0.01], &cfg),
            Err(Error::Inadmissible { .. })
        ));
    }

    #[test]
    fn small_core_perturbation_converges() {
        let p = ProblemParams::new(3, 0.6, 2.5).unwrap();
        let f = shape(3, &[(2, Kind::Zonal, 0.02)]);
        let s = solve_for_g(&p, &f, None, &NewtonConfig::new(3, 40, 16)).unwrap();
        assert!(s.residual <= 1e-9);
        assert!(s.d.integral < 2.0 / 3.0);
        assert!(s.d.spread < 1e-7);
    }

    #[test]
    fn augmented_solve_zero_target() {
        let cfg = NewtonConfig::new(2, 16, 6);
        let s = one_phase_augmented_solve(2, &[0.0, 0.0], &cfg).unwrap();
        assert!(s.g.is_zero());
        assert!(one_phase_augmented_solve(2, &[1.0, 0.0], &cfg).is_err());
        assert!(one_phase_augmented_solve(3, &[0.0, 0.01, 0.0], &cfg).is_err());
    }

    #[test]
    fn random_perturbation_is_deterministic() {
        let a = random_perturbation(2, 6, 0.01, 3);
        assert_eq!(a, random_perturbation(2, 6, 0.01, 3));
        assert_ne!(a, random_perturbation(2, 6, 0.01, 4));
        assert!((a.sup_norm() - 0.01).abs() < 1e-3);
    }
}
