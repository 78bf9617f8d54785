//! The overdetermined map `Φ(f, g, σ) = Π_0(∂²_{nn} u)` on `∂Ω_g` and the
//! functionals used to verify its zeros.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    default_node_count, quadrature, BoundaryCurve, ProblemParams, QuadratureRule, ShapeCoeffs,
};
use crate::harmonics::analyze;
use crate::solver::{solve_transmission, Discretization, Phase, SpectralSolution};

/// Node set used for boundary functionals resolving degree `kmax`.
pub fn boundary_rule(dim: usize, kmax: usize) -> QuadratureRule {
    quadrature(dim, default_node_count(dim, kmax))
}

/// `n · D²u · n` at the boundary point of `curve` at `theta`, taken from the outer phase.
pub fn second_normal_derivative(sol: &SpectralSolution, curve: &BoundaryCurve, theta: f64) -> f64 {
    let jet = sol.phase_jet(Phase::Outer, curve.point(theta));
    jet.second_directional(curve.plane_normal(theta))
}

/// Two estimates of the constant `d` in `∂_n u = -d/H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DEstimate {
    /// `|Ω| / ∫_{∂Ω} 1/H`.
    pub integral: f64,
    /// Mean of the nodal values `-H ∂_n u`.
    pub pointwise_mean: f64,
    /// `max - min` of the nodal values.
    pub spread: f64,
}

/// Image of a state under `Φ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverdetResidual {
    /// Angles of the boundary nodes.
    pub angles: Vec<f64>,
    /// `∂²_{nn} u` at the nodes.
    pub nodal: Vec<f64>,
    /// Removed constant (flat mean over `∂Ω_0`).
    pub mean: f64,
    /// Modal coefficients of the zero-mean part, degrees `1..=K`.
    pub modes: ShapeCoeffs,
    /// `sup |∂²_{nn} u - mean|` over the nodes.
    pub sup_norm: f64,
    /// `None` when the boundary is not strictly mean convex.
    pub d: Option<DEstimate>,
}

/// `Φ` of an already solved state, with modal output up to degree `kmax`.
pub fn phi_of(sol: &SpectralSolution, kmax: usize) -> Result<OverdetResidual> {
    let rule = boundary_rule(sol.dim(), kmax);
    let curve = &sol.outer_curve;
    let nodal: Vec<f64> = rule
        .nodes
        .iter()
        .map(|&t| second_normal_derivative(sol, curve, t))
        .collect();
    let (modes, mean) = analyze(&nodal, &rule, kmax)?;
    let sup_norm = nodal.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    Ok(OverdetResidual {
        angles: rule.nodes.clone(),
        nodal,
        mean,
        modes,
        sup_norm,
        d: extract_d(sol).ok(),
    })
}

/// Solve the state problem on `(D_f, Ω_g)` and evaluate `Φ`, with modes up to the solver truncation.
pub fn phi(
    params: &ProblemParams,
    f: &ShapeCoeffs,
    g: &ShapeCoeffs,
    disc: &Discretization,
) -> Result<OverdetResidual> {
    let sol = solve_transmission(params, f, g, disc)?;
    phi_of(&sol, disc.truncation)
}

fn functional_rule(sol: &SpectralSolution) -> QuadratureRule {
    let k = sol
        .discretization
        .truncation
        .max(sol.outer_curve.perturbation.truncation());
    boundary_rule(sol.dim(), k)
}

fn min_curvature(curve: &BoundaryCurve, rule: &QuadratureRule) -> Result<()> {
    let min_h = rule
        .nodes
        .iter()
        .map(|&t| curve.mean_curvature(t))
        .fold(f64::INFINITY, f64::min);
    if min_h <= 0.0 {
        return Err(Error::NonPositiveCurvature { min_h });
    }
    Ok(())
}

/// Estimate `d` from `|Ω| = d ∫ 1/H` and from the pointwise ratio `-H ∂_n u`.
pub fn extract_d(sol: &SpectralSolution) -> Result<DEstimate> {
    let rule = functional_rule(sol);
    let curve = &sol.outer_curve;
    min_curvature(curve, &rule)?;
    let inv_h = curve.surface_integral_with(&rule, |t| 1.0 / curve.mean_curvature(t));
    let values: Vec<f64> = rule
        .nodes
        .iter()
        .map(|&t| {
            let jet = sol.phase_jet(Phase::Outer, curve.point(t));
            -curve.mean_curvature(t) * jet.normal_derivative(curve.plane_normal(t))
        })
        .collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DEstimate {
        integral: curve.volume_with(&rule) / inv_h,
        pointwise_mean: values.iter().sum::<f64>() / values.len() as f64,
        spread: max - min,
    })
}

/// `∫_{∂Ω} 1/H - N/(N-1) |Ω|`, nonnegative for mean-convex domains and zero exactly for balls.
pub fn heintze_karcher_gap_with(curve: &BoundaryCurve, rule: &QuadratureRule) -> Result<f64> {
    min_curvature(curve, rule)?;
    let n = curve.dim() as f64;
    let inv_h = curve.surface_integral_with(rule, |t| 1.0 / curve.mean_curvature(t));
    Ok(inv_h - n / (n - 1.0) * curve.volume_with(rule))
}

pub fn heintze_karcher_gap(curve: &BoundaryCurve) -> Result<f64> {
    heintze_karcher_gap_with(curve, &curve.default_rule())
}

/// Defects of the flux balance of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceGaps {
    /// `|Ω| + ∫_{∂Ω} ∂_n u`.
    pub outer: f64,
    /// `∫_{∂D} (σ ∂_n u_in - ∂_n u_out)`; zero without a core.
    pub interface: f64,
}

pub fn divergence_identity_gap(sol: &SpectralSolution) -> DivergenceGaps {
    let rule = functional_rule(sol);
    let curve = &sol.outer_curve;
    let flux = curve.surface_integral_with(&rule, |t| {
        sol.phase_jet(Phase::Outer, curve.point(t))
            .normal_derivative(curve.plane_normal(t))
    });
    let interface = match &sol.inner_curve {
        Some(c) => c.surface_integral_with(&rule, |t| {
            let p = c.point(t);
            let n = c.plane_normal(t);
            sol.params.sigma * sol.phase_jet(Phase::Inner, p).normal_derivative(n)
                - sol.phase_jet(Phase::Outer, p).normal_derivative(n)
        }),
        None => 0.0,
    };
    DivergenceGaps {
        outer: curve.volume_with(&rule) + flux,
        interface,
    }
}

/// Residual of the constant-flux condition `∂_n u = -c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SerrinResidual {
    /// `∂_n u` minus its flat mean, at the nodes.
    pub projected: Vec<f64>,
    pub sup_norm: f64,
    /// `|Ω| / |∂Ω|`.
    pub c_estimate: f64,
}

pub fn serrin_residual(sol: &SpectralSolution) -> SerrinResidual {
    let rule = functional_rule(sol);
    let curve = &sol.outer_curve;
    let values: Vec<f64> = rule
        .nodes
        .iter()
        .map(|&t| {
            sol.phase_jet(Phase::Outer, curve.point(t))
                .normal_derivative(curve.plane_normal(t))
        })
        .collect();
    let area: f64 = rule.weights.iter().sum();
    let mean = values
        .iter()
        .zip(&rule.weights)
        .map(|(v, w)| v * w)
        .sum::<f64>()
        / area;
    let projected: Vec<f64> = values.iter().map(|v| v - mean).collect();
    SerrinResidual {
        sup_norm: projected.iter().map(|v| v.abs()).fold(0.0, f64::max),
        projected,
        c_estimate: curve.volume_with(&rule) / curve.surface_integral_with(&rule, |_| 1.0),
    }
}

/// Laplace–Beltrami operator of the restriction of a phase to a boundary, at `theta`.
fn tangential_laplacian(
    sol: &SpectralSolution,
    curve: &BoundaryCurve,
    phase: Phase,
    theta: f64,
) -> f64 {
    let j = curve.jet(theta);
    let (r, r1, r2) = (j.value, j.d1, j.d2);
    let (s, c) = theta.sin_cos();
    let p1 = [r1 * c - r * s, r1 * s + r * c];
    let p2 = [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s];
    let jet = sol.phase_jet(phase, curve.point(theta));
    let phi1 = jet.grad[0] * p1[0] + jet.grad[1] * p1[1];
    let phi2 = jet.second_directional(p1) + jet.grad[0] * p2[0] + jet.grad[1] * p2[1];
    let l = r.hypot(r1);
    let l1 = (r * r1 + r1 * r2) / l;
    let along = (phi2 * l - phi1 * l1) / (l * l * l);
    if sol.dim() == 2 {
        return along;
    }
    // surface of revolution: add (N-2) (s_ℓ / s) φ_ℓ with s the distance to the axis
    let axis = r * s;
    along + (sol.dim() as f64 - 2.0) * (p1[1] / l) / axis * (phi1 / l)
}

/// `max |∂²_{nn} u + H ∂_n u + Δ_τ u - Δu|` over interior boundary nodes of one phase.
pub fn decomposition_defect(sol: &SpectralSolution, curve: &BoundaryCurve, phase: Phase) -> f64 {
    let rule = functional_rule(sol);
    let mut worst: f64 = 0.0;
    for &t in &rule.nodes {
        let jet = sol.phase_jet(phase, curve.point(t));
        let n = curve.plane_normal(t);
        let lhs = jet.second_directional(n)
            + curve.mean_curvature(t) * jet.normal_derivative(n)
            + tangential_laplacian(sol, curve, phase, t);
        worst = worst.max((lhs - jet.laplacian(sol.dim())).abs());
    }
    worst
}

/// Finite-difference scheme for [`fd_linearization`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    Forward,
    Central,
    /// Central differences at `h` and `h/2`, extrapolated.
    Richardson,
}

/// Directional derivative of `Φ(0, ·, σ)` at `g = 0`, as modal coefficients up to `kmax`.
pub fn fd_linearization(
    params: &ProblemParams,
    direction: &ShapeCoeffs,
    h: f64,
    scheme: FdScheme,
    kmax: usize,
    disc: &Discretization,
) -> Result<ShapeCoeffs> {
    if !(h > 0.0) {
        return Err(Error::param("h", "step must be positive"));
    }
    let f = ShapeCoeffs::zeros(params.dim, 0);
    let at = |t: f64| -> Result<ShapeCoeffs> {
        let sol = solve_transmission(params, &f, &direction.scale(t), disc)?;
        Ok(phi_of(&sol, kmax)?.modes)
    };
    let central = |h: f64| -> Result<ShapeCoeffs> { Ok(at(h)?.sub(&at(-h)?).scale(0.5 / h)) };
    match scheme {
        FdScheme::Forward => Ok(at(h)?.sub(&at(0.0)?).scale(1.0 / h)),
        FdScheme::Central => central(h),
        FdScheme::Richardson => {
            let coarse = central(h)?;
            let fine = central(0.5 * h)?;
            Ok(fine.scale(4.0 / 3.0).sub(&coarse.scale(1.0 / 3.0)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Kind;
    use crate::radial;

    fn shape(dim: usize, modes: &[(usize, Kind, f64)]) -> ShapeCoeffs {
        ShapeCoeffs::from_modes(dim, modes, 0).unwrap()
    }

    fn trivial(dim: usize, sigma: f64) -> SpectralSolution {
        let p = ProblemParams::new(dim, 0.5, sigma).unwrap();
        let z = ShapeCoeffs::zeros(dim, 0);
        solve_transmission(&p, &z, &z, &Discretization::new(dim, 12)).unwrap()
    }

    #[test]
    fn trivial_pairs_are_solutions() {
        for dim in [2, 3] {
            for sigma in [0.5, 2.0, 5.0] {
                let sol = trivial(dim, sigma);
                let r = phi_of(&sol, 12).unwrap();
                assert!(r.sup_norm < 1e-10);
                assert!((r.mean + 1.0 / dim as f64).abs() < 1e-12);
                for &t in &r.angles {
                    let v = second_normal_derivative(&sol, &sol.outer_curve, t);
                    assert!((v + 1.0 / dim as f64).abs() < 1e-12);
                }
                let d = extract_d(&sol).unwrap();
                let want = (dim as f64 - 1.0) / dim as f64;
                assert!((d.integral - want).abs() < 1e-10);
                assert!((d.pointwise_mean - want).abs() < 1e-10);
                assert!(d.spread < 1e-10);
                let gaps = divergence_identity_gap(&sol);
                assert!(gaps.outer.abs() < 1e-12 && gaps.interface.abs() < 1e-12);
                let s = serrin_residual(&sol);
                assert!(s.sup_norm < 1e-12);
                assert!((s.c_estimate - 1.0 / dim as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hk_gap_examples() {
        assert!(
            heintze_karcher_gap(&BoundaryCurve::ball(2, 1.0))
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!(
            heintze_karcher_gap(&BoundaryCurve::ball(3, 1.0))
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!(
            heintze_karcher_gap(&BoundaryCurve::ball(4, 0.7))
                .unwrap()
                .abs()
                < 1e-12
        );
        let c = BoundaryCurve::new(1.0, shape(2, &[(2, Kind::Cos, 0.1)])).unwrap();
        let gap = heintze_karcher_gap(&c).unwrap();
        assert!(gap > 1e-4);
        let dense = heintze_karcher_gap_with(&c, &quadrature(2, 4096)).unwrap();
        assert!((gap - dense).abs() < 1e-8);
        let dented = BoundaryCurve::new(1.0, shape(2, &[(3, Kind::Cos, 0.2)])).unwrap();
        assert!(matches!(
            heintze_karcher_gap(&dented),
            Err(Error::NonPositiveCurvature { .. })
        ));
    }

    #[test]
    fn second_derivative_forms_and_decomposition() {
        let p = ProblemParams::new(2, 0.5, 3.0).unwrap();
        let f = shape(2, &[(3, Kind::Cos, 0.03)]);
        let g = shape(2, &[(2, Kind::Cos, 0.04), (1, Kind::Sin, 0.02)]);
        let sol = solve_transmission(&p, &f, &g, &Discretization::new(2, 40)).unwrap();
        for i in 0..40 {
            let t = 0.157 * i as f64;
            let jet = sol.phase_jet(Phase::Outer, sol.outer_curve.point(t));
            let b = jet.grad;
            let bb = b[0] * b[0] + b[1] * b[1];
            let ct = (b[0] * (jet.hess[0] * b[0] + jet.hess[1] * b[1])
                + b[1] * (jet.hess[1] * b[0] + jet.hess[2] * b[1]))
                / bb;
            // the two forms agree up to the normal/gradient misalignment of the discrete state
            assert!((ct - second_normal_derivative(&sol, &sol.outer_curve, t)).abs() < 1e-8);
        }
        assert!(decomposition_defect(&sol, &sol.outer_curve, Phase::Outer) < 1e-6);
        let core = sol.inner_curve.as_ref().unwrap();
        assert!(decomposition_defect(&sol, core, Phase::Inner) < 1e-6);
        assert!(decomposition_defect(&sol, core, Phase::Outer) < 1e-6);

        let p3 = ProblemParams::new(3, 0.5, 3.0).unwrap();
        let f3 = shape(3, &[(2, Kind::Zonal, 0.03)]);
        let g3 = shape(3, &[(1, Kind::Zonal, 0.02), (3, Kind::Zonal, 0.04)]);
        let sol3 = solve_transmission(&p3, &f3, &g3, &Discretization::new(3, 40)).unwrap();
        assert!(decomposition_defect(&sol3, &sol3.outer_curve, Phase::Outer) < 1e-6);
        let core3 = sol3.inner_curve.as_ref().unwrap();
        assert!(decomposition_defect(&sol3, core3, Phase::Inner) < 1e-6);
    }

    #[test]
    fn flux_balance_on_perturbed_states() {
        let p = ProblemParams::new(2, 0.6, 0.4).unwrap();
        let f = shape(2, &[(2, Kind::Sin, 0.02)]);
        let g = shape(2, &[(3, Kind::Cos, 0.03)]);
        let sol = solve_transmission(&p, &f, &g, &Discretization::new(2, 40)).unwrap();
        let gaps = divergence_identity_gap(&sol);
        assert!(gaps.outer.abs() < 1e-8 && gaps.interface.abs() < 1e-8);
        let d = extract_d(&sol).unwrap();
        // a non-solution: d is reported, with a spread of the order of the shape
        assert!(d.spread > 1e-3);
        assert!(phi_of(&sol, 16).unwrap().sup_norm > 1e-3);
    }

    #[test]
    fn linearization_is_diagonal_with_beta_eigenvalues() {
        let p = ProblemParams::new(2, 0.8, 2.0).unwrap();
        let disc = Discretization::new(2, 24);
        for k in [1, 2, 3] {
            let dir = shape(2, &[(k, Kind::Cos, 1.0)]);
            let lin = fd_linearization(&p, &dir, 1e-5, FdScheme::Central, 10, &disc).unwrap();
            let beta = radial::beta(k, &p);
            assert!(
                (lin.get(k, Kind::Cos) - beta).abs() < 1e-6 * (1.0 + beta.abs()),
                "k={k}"
            );
            for (j, kind, v) in lin.modes() {
                if (j, kind) != (k, Kind::Cos) {
                    assert!(v.abs() < 1e-7, "leak into {j} {kind:?}: {v}");
                }
            }
        }
        let one = ProblemParams::one_phase(3).unwrap();
        for k in [2, 4] {
            let dir = shape(3, &[(k, Kind::Zonal, 1.0)]);
            let lin = fd_linearization(
                &one,
                &dir,
                1e-5,
                FdScheme::Richardson,
                8,
                &Discretization::new(3, 16),
            )
            .unwrap();
            let want = (k * (k - 1)) as f64 / 3.0;
            assert!((lin.get(k, Kind::Zonal) - want).abs() < 1e-6);
        }
    }

    #[test]
    fn translated_ball_solves_one_phase_problem() {
        let tb = crate::geometry::zero_mean_translated_ball(2, &[0.05, 0.02], 30).unwrap();
        let p = ProblemParams::one_phase(2).unwrap();
        let z = ShapeCoeffs::zeros(2, 0);
        let sol = solve_transmission(&p, &z, &tb.shape, &Discretization::new(2, 40)).unwrap();
        let r = phi_of(&sol, 20).unwrap();
        assert!(r.sup_norm < 1e-8, "{}", r.sup_norm);
        assert!(serrin_residual(&sol).sup_norm < 1e-8);
    }
}
