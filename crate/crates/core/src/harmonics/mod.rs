//! Spherical-harmonic machinery.
//!
//! Two conventions coexist here:
//!
//! * the **unit-peak** harmonics `P̃_k(cos θ)` (with `P̃_k(1) = 1`), i.e. `cos kθ`
//!   in the plane and the normalized Gegenbauer polynomial `C_k^{(N-2)/2}(t) / C_k^{(N-2)/2}(1)`
//!   in higher dimension. [`ShapeCoeffs`] stores coefficients against this basis.
//! * the **orthonormal** zonal harmonics `Y_k = P̃_k · sqrt(d_k / |S^{N-1}|)`, exposed
//!   through [`zonal_eval`] and [`ZonalBasis`].
//!
//! The exact generator for invariant harmonic polynomials lives in [`exact`].

pub mod exact;

use crate::error::{Error, Result};
use crate::geometry::{QuadratureRule, ShapeCoeffs};

/// Surface measure `|S^{N-1}|` of the unit sphere in `R^N`.
pub fn sphere_area(dim: usize) -> f64 {
    assert!(dim >= 1);
    // |S^0| = 2, |S^1| = 2π, |S^{n+1}| = 2π/n · |S^{n-1}|
    let mut area = if dim % 2 == 1 {
        2.0
    } else {
        2.0 * std::f64::consts::PI
    };
    let mut n = if dim % 2 == 1 { 1 } else { 2 };
    while n < dim {
        area *= 2.0 * std::f64::consts::PI / n as f64;
        n += 2;
    }
    area
}

/// Laplace–Beltrami eigenvalue `λ_k = k(N + k - 2)`.
pub fn eigenvalue(k: usize, dim: usize) -> usize {
    k * (dim + k - 2)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Dimension `d_k` of the degree-`k` eigenspace on `S^{N-1}`.
pub fn multiplicity(k: usize, dim: usize) -> usize {
    let a = binomial(k + dim - 1, dim - 1);
    let b = if k >= 2 {
        binomial(k + dim - 3, dim - 1)
    } else {
        0.0
    };
    (a - b).round() as usize
}

/// Value and first two polar-angle derivatives of a function of `θ`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AngularJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Unit-peak zonal harmonics `P̃_0..=P̃_kmax` at polar angle `θ`, with θ-derivatives.
///
/// In the plane these are `cos kθ`.
pub fn unit_harmonics(dim: usize, kmax: usize, theta: f64) -> Vec<AngularJet> {
    let mut out = Vec::with_capacity(kmax + 1);
    if dim == 2 {
        for k in 0..=kmax {
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            out.push(AngularJet {
                value: c,
                d1: -kf * s,
                d2: -kf * kf * c,
            });
        }
        return out;
    }
    let (st, ct) = theta.sin_cos();
    let t = AngularJet {
        value: ct,
        d1: -st,
        d2: -ct,
    };
    out.push(AngularJet {
        value: 1.0,
        d1: 0.0,
        d2: 0.0,
    });
    if kmax == 0 {
        return out;
    }
    out.push(t);
    let n = dim as f64;
    for k in 1..kmax {
        let kf = k as f64;
        let yk = out[k];
        let ym = out[k - 1];
        let ty = AngularJet {
            value: t.value * yk.value,
            d1: t.d1 * yk.value + t.value * yk.d1,
            d2: t.d2 * yk.value + 2.0 * t.d1 * yk.d1 + t.value * yk.d2,
        };
        let a = 2.0 * kf + n - 2.0;
        let den = kf + n - 2.0;
        out.push(AngularJet {
            value: (a * ty.value - kf * ym.value) / den,
            d1: (a * ty.d1 - kf * ym.d1) / den,
            d2: (a * ty.d2 - kf * ym.d2) / den,
        });
    }
    out
}

/// `∫_{S^{N-1}} P̃_k²`, i.e. `|S^{N-1}| / d_k`.
pub fn unit_harmonic_norm_sq(k: usize, dim: usize) -> f64 {
    sphere_area(dim) / multiplicity(k, dim) as f64
}

/// L²(S^{N-1})-normalized zonal harmonic of degree `k` at `t = cos θ`.
///
/// In the plane this is `cos kθ / sqrt(π)` (`1/sqrt(2π)` for `k = 0`).
pub fn zonal_eval(k: usize, dim: usize, t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    let peak = if dim == 2 {
        (k as f64 * t.acos()).cos()
    } else {
        unit_harmonics(dim, k, t.acos())[k].value
    };
    peak / unit_harmonic_norm_sq(k, dim).sqrt()
}

/// Orthonormal zonal basis of degrees `0..=max_degree`.
#[derive(Debug, Clone)]
pub struct ZonalBasis {
    pub dim: usize,
    pub max_degree: usize,
    /// `1 / ‖P̃_k‖` for each degree.
    pub normalization: Vec<f64>,
}

impl ZonalBasis {
    pub fn new(dim: usize, max_degree: usize) -> Self {
        let normalization = (0..=max_degree)
            .map(|k| 1.0 / unit_harmonic_norm_sq(k, dim).sqrt())
            .collect();
        ZonalBasis {
            dim,
            max_degree,
            normalization,
        }
    }

    /// Values `Y_0(θ) ..= Y_K(θ)`.
    pub fn eval_all(&self, theta: f64) -> Vec<f64> {
        unit_harmonics(self.dim, self.max_degree, theta)
            .iter()
            .zip(&self.normalization)
            .map(|(j, c)| j.value * c)
            .collect()
    }

    /// Gram matrix `∫ Y_i Y_j` under `rule`.
    pub fn gram(&self, rule: &QuadratureRule) -> Vec<Vec<f64>> {
        let k = self.max_degree + 1;
        let mut g = vec![vec![0.0; k]; k];
        for (theta, w) in rule.nodes.iter().zip(&rule.weights) {
            let y = self.eval_all(*theta);
            for i in 0..k {
                for j in 0..k {
                    g[i][j] += w * y[i] * y[j];
                }
            }
        }
        g
    }
}

/// Largest degree `analyze` can resolve exactly with `rule`.
pub fn max_resolvable_degree(rule: &QuadratureRule) -> usize {
    let n = rule.nodes.len();
    if rule.dim == 2 {
        (n - 1) / 2
    } else {
        n.saturating_sub(1)
    }
}

/// Project nodal values onto the unit-peak basis of degrees `1..=kmax`.
///
/// Returns the zero-mean coefficients and, separately, the surface mean
/// (the degree-0 component) that was discarded.
pub fn analyze(values: &[f64], rule: &QuadratureRule, kmax: usize) -> Result<(ShapeCoeffs, f64)> {
    if values.len() != rule.nodes.len() {
        return Err(Error::param(
            "values",
            format!("{} values for {} nodes", values.len(), rule.nodes.len()),
        ));
    }
    if kmax > max_resolvable_degree(rule) {
        return Err(Error::Aliasing {
            degree: kmax,
            nodes: rule.nodes.len(),
        });
    }
    let dim = rule.dim;
    let area = sphere_area(dim);
    let mut coeffs = ShapeCoeffs::zeros(dim, kmax);
    let mut mean = 0.0;
    for ((theta, w), v) in rule.nodes.iter().zip(&rule.weights).zip(values) {
        mean += w * v;
        let jets = unit_harmonics(dim, kmax, *theta);
        for k in 1..=kmax {
            coeffs.cos[k - 1] += w * v * jets[k].value;
            if dim == 2 {
                coeffs.sin[k - 1] += w * v * (k as f64 * theta).sin();
            }
        }
    }
    for k in 1..=kmax {
        let norm = unit_harmonic_norm_sq(k, dim);
        coeffs.cos[k - 1] /= norm;
        if dim == 2 {
            coeffs.sin[k - 1] /= norm;
        }
    }
    Ok((coeffs, mean / area))
}

/// Evaluate `coeffs` (without a constant term) at the given polar angles.
pub fn synthesize(coeffs: &ShapeCoeffs, nodes: &[f64]) -> Vec<f64> {
    nodes.iter().map(|&t| coeffs.eval(t)).collect()
}
