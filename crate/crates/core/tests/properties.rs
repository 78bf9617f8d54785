use overdet::geometry::{quadrature, BoundaryCurve, Kind, ProblemParams, ShapeCoeffs};
use overdet::harmonics::exact::invariant_harmonic_poly;
use overdet::harmonics::{analyze, synthesize, unit_harmonics};
use overdet::radial::{beta, critical_value, trivial_u, u_prime_radial};
use overdet::solver::{solve_transmission, Discretization};
use proptest::prelude::*;
use std::f64::consts::PI;

fn coeffs(dim: usize, values: &[f64]) -> ShapeCoeffs {
    let kinds: &[Kind] = if dim == 2 {
        &[Kind::Cos, Kind::Sin]
    } else {
        &[Kind::Zonal]
    };
    let modes: Vec<_> = values
        .chunks(kinds.len())
        .enumerate()
        .flat_map(|(i, c)| c.iter().zip(kinds).map(move |(&v, &kind)| (i + 1, kind, v)))
        .collect();
    ShapeCoeffs::from_modes(dim, &modes, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn critical_value_zeroes_beta(k in 2usize..=10, dim in 2usize..=4, r in 0.2f64..0.9) {
        let cv = critical_value(k, dim, r).unwrap();
        if let Some(s) = cv.s_k {
            let p = ProblemParams::new(dim, r, s).unwrap();
            prop_assert!(beta(k, &p).abs() <= 1e-10 * (1.0 + s));
            prop_assert!(cv.slope.unwrap() < 0.0);
        }
    }

    #[test]
    fn matched_conductivity_is_one_phase(k in 1usize..=12, dim in 2usize..=5, r in 0.05f64..0.95) {
        let p = ProblemParams::new(dim, r, 1.0).unwrap();
        let want = (k * (k - 1)) as f64 / dim as f64;
        prop_assert!((beta(k, &p) - want).abs() <= 1e-10 * (1.0 + want));
    }

    #[test]
    fn shape_derivative_transmission(k in 1usize..=8, dim in 2usize..=4, r in 0.2f64..0.9, sigma in 0.1f64..10.0) {
        let p = ProblemParams::new(dim, r, sigma).unwrap();
        let inner = u_prime_radial(k, &p, r).unwrap();
        let outer = u_prime_radial(k, &p, r * (1.0 + 1e-15) + 1e-15).unwrap();
        let scale = 1.0 + inner[0].abs() + inner[1].abs() * sigma;
        prop_assert!((inner[0] - outer[0]).abs() <= 1e-9 * scale);
        prop_assert!((sigma * inner[1] - outer[1]).abs() <= 1e-9 * scale);
        let boundary = u_prime_radial(k, &p, 1.0).unwrap()[0];
        prop_assert!((boundary - 1.0 / dim as f64).abs() <= 1e-12);
    }

    #[test]
    fn analyze_inverts_synthesize(dim in 2usize..=4, values in prop::collection::vec(-1.0f64..1.0, 12)) {
        let c = coeffs(dim, &values);
        let rule = quadrature(dim, 64);
        let (back, mean) = analyze(&synthesize(&c, &rule.nodes), &rule, c.truncation()).unwrap();
        prop_assert!(mean.abs() <= 1e-12);
        prop_assert!(back.sub(&c).max_abs() <= 1e-12);
    }

    #[test]
    fn shape_evaluation_is_linear(
        dim in 2usize..=4,
        a in prop::collection::vec(-1.0f64..1.0, 8),
        b in prop::collection::vec(-1.0f64..1.0, 8),
        lambda in -3.0f64..3.0,
        theta in 0.0f64..PI,
    ) {
        let (x, y) = (coeffs(dim, &a), coeffs(dim, &b));
        let lhs = x.scale(lambda).add(&y).eval(theta);
        prop_assert!((lhs - lambda * x.eval(theta) - y.eval(theta)).abs() <= 1e-12);
    }

    #[test]
    fn sphere_curvature(dim in 2usize..=5, r in 0.1f64..5.0, theta in 0.01f64..3.1) {
        let h = BoundaryCurve::ball(dim, r).mean_curvature(theta);
        prop_assert!((h - (dim as f64 - 1.0) / r).abs() <= 1e-12 * h);
    }

    #[test]
    fn exact_polynomial_is_zonal_harmonic(k in 1usize..=8, dim in 2usize..=5, theta in 0.0f64..PI) {
        let p = invariant_harmonic_poly(k, dim);
        let scaled = p.restrict_to_sphere(theta) / p.restrict_to_sphere(0.0);
        prop_assert!((scaled - unit_harmonics(dim, k, theta)[k].value).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trivial_state_solves_the_pde(
        dim in 2usize..=3,
        r in 0.2f64..0.8,
        sigma in 0.2f64..8.0,
        x in prop::collection::vec(-0.7f64..0.7, 3),
    ) {
        let p = ProblemParams::new(dim, r, sigma).unwrap();
        let z = ShapeCoeffs::zeros(dim, 0);
        let sol = solve_transmission(&p, &z, &z, &Discretization::new(dim, 8)).unwrap();
        let pt = &x[..dim];
        let rad = pt.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!((rad - r).abs() > 1e-6);
        prop_assert!((sol.eval_u(pt).unwrap() - trivial_u(&p, rad)).abs() <= 1e-10);
        let trace = sol.eval_hessian(pt).unwrap().trace();
        let want = if rad < r { -1.0 / sigma } else { -1.0 };
        prop_assert!((trace - want).abs() <= 1e-9);
    }

    #[test]
    fn perturbed_state_is_harmonic_plus_quadratic(
        dim in 2usize..=3,
        sigma in 0.3f64..5.0,
        fv in prop::collection::vec(-0.02f64..0.02, 4),
        gv in prop::collection::vec(-0.02f64..0.02, 4),
        theta in 0.0f64..PI,
        t in 0.0f64..0.95,
    ) {
        let p = ProblemParams::new(dim, 0.5, sigma).unwrap();
        let sol = solve_transmission(&p, &coeffs(dim, &fv), &coeffs(dim, &gv), &Discretization::new(dim, 24)).unwrap();
        prop_assert!(sol.residual.max <= 1e-6);
        let pt: Vec<f64> = if dim == 2 {
            vec![t * theta.cos(), t * theta.sin()]
        } else {
            vec![t * theta.cos(), t * theta.sin(), 0.0]
        };
        if let Ok(phase) = sol.locate(&pt) {
            let trace = sol.eval_hessian(&pt).unwrap().trace();
            prop_assert!((trace + 1.0 / sol.phase_sigma(phase)).abs() <= 1e-8);
        }
    }
}
