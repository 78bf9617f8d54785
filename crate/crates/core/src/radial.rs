//! Closed-form radial quantities around the concentric configuration
//! `(B_R, B_1)`: the trivial state, the shape-derivative mode coefficients,
//! the linearized spectrum `β_k`, and the critical conductivities `s_k`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ProblemParams;

/// Default largest degree scanned when enumerating critical values.
pub const DEFAULT_KMAX: usize = 32;

/// `R^{2-N-2k}`.
fn core_power(k: usize, dim: usize, radius: f64) -> f64 {
    radius.powi(2 - dim as i32 - 2 * k as i32)
}

/// Concentric-ball state solving `-div(σ∇u) = 1`, `u = 0` on `|x| = 1`.
pub fn trivial_u(params: &ProblemParams, r: f64) -> f64 {
    let n = params.dim as f64;
    let big_r = params.core_radius;
    if r < big_r {
        (1.0 - big_r * big_r) / (2.0 * n) + (big_r * big_r - r * r) / (2.0 * n * params.sigma)
    } else {
        (1.0 - r * r) / (2.0 * n)
    }
}

/// The constant `d = (N-1)/N` shared by all trivial solutions.
pub fn trivial_d(params: &ProblemParams) -> f64 {
    (params.dim as f64 - 1.0) / params.dim as f64
}

/// Shape-derivative coefficients for degree `k`: `u' = B_k r^k` inside the core,
/// `C_k r^{2-N-k} + D_k r^k` in the shell, per unit boundary amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCoefficients {
    pub k: usize,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Common denominator.
    pub f: f64,
}

pub fn mode_coefficients(k: usize, params: &ProblemParams) -> Result<ModeCoefficients> {
    if k == 0 {
        return Err(Error::param("k", "degree must be at least 1"));
    }
    if params.is_one_phase() {
        return Err(Error::param(
            "core_radius",
            "R = 0 has no core; use the one-phase formulas",
        ));
    }
    let (n, kf, s) = (params.dim as f64, k as f64, params.sigma);
    let p = core_power(k, params.dim, params.core_radius);
    let f = n * (n - 2.0 + kf + kf * s) * p + kf * n * (1.0 - s);
    Ok(ModeCoefficients {
        k,
        b: (n - 2.0 + 2.0 * kf) * p / f,
        c: (1.0 - s) * kf / f,
        d: (n - 2.0 + kf + kf * s) * p / f,
        f,
    })
}

/// Value and first two `r`-derivatives of the radial profile of `u'` for degree `k`.
pub fn u_prime_radial(k: usize, params: &ProblemParams, r: f64) -> Result<[f64; 3]> {
    if k == 0 {
        return Err(Error::param("k", "degree must be at least 1"));
    }
    let kf = k as f64;
    let pow = |e: f64| -> [f64; 3] {
        // r^e with derivatives; r^0-type terms at r = 0 handled by e ≥ 1 here
        [
            r.powf(e),
            if e == 0.0 { 0.0 } else { e * r.powf(e - 1.0) },
            if e == 0.0 || e == 1.0 {
                0.0
            } else {
                e * (e - 1.0) * r.powf(e - 2.0)
            },
        ]
    };
    let n = params.dim as f64;
    if params.is_one_phase() {
        let p = pow(kf);
        return Ok([p[0] / n, p[1] / n, p[2] / n]);
    }
    let m = mode_coefficients(k, params)?;
    if r <= params.core_radius {
        let p = pow(kf);
        Ok([m.b * p[0], m.b * p[1], m.b * p[2]])
    } else {
        let g = pow(kf);
        let dcy = pow(2.0 - n - kf);
        Ok([
            m.c * dcy[0] + m.d * g[0],
            m.c * dcy[1] + m.d * g[1],
            m.c * dcy[2] + m.d * g[2],
        ])
    }
}

/// Eigenvalue of the linearized overdetermined map on degree-`k` perturbations
/// of the outer boundary.
pub fn beta(k: usize, params: &ProblemParams) -> f64 {
    let (n, kf) = (params.dim as f64, k as f64);
    if params.is_one_phase() {
        return kf * (kf - 1.0) / n;
    }
    let s = params.sigma;
    let p = core_power(k, params.dim, params.core_radius);
    let num =
        (2.0 - n - kf) * (1.0 - n - kf) * (1.0 - s) + (kf - 1.0) * (n - 2.0 + kf + kf * s) * p;
    let den = kf * n * (1.0 - s) + n * (n - 2.0 + kf + kf * s) * p;
    kf * num / den
}

/// `k(k-1) R^{2-N-2k} < (k+N-2)(k+N-1)`.
pub fn is_admissible(k: usize, dim: usize, radius: f64) -> bool {
    let (n, kf) = (dim as f64, k as f64);
    kf * (kf - 1.0) * core_power(k, dim, radius) < (kf + n - 2.0) * (kf + n - 1.0)
}

/// A critical conductivity `s_k` with its admissibility and `∂_s β_k(s_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalValue {
    pub k: usize,
    /// Present only when admissible.
    pub s_k: Option<f64>,
    pub admissible: bool,
    pub slope: Option<f64>,
}

pub fn critical_value(k: usize, dim: usize, radius: f64) -> Result<CriticalValue> {
    if k < 2 {
        return Err(Error::param("k", "critical values start at k = 2"));
    }
    if dim < 2 {
        return Err(Error::param("dim", "dimension must be at least 2"));
    }
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::param("radius", "core radius must lie in (0, 1)"));
    }
    if !is_admissible(k, dim, radius) {
        return Ok(CriticalValue {
            k,
            s_k: None,
            admissible: false,
            slope: None,
        });
    }
    let (n, kf) = (dim as f64, k as f64);
    let p = core_power(k, dim, radius);
    let a = (kf + n - 2.0) * (kf + n - 1.0);
    let s = (kf + n - 2.0) * (kf + n - 1.0 + (kf - 1.0) * p) / (a - kf * (kf - 1.0) * p);
    let slope =
        kf * (-a + kf * (kf - 1.0) * p) / (kf * n * (1.0 - s) + n * (n - 2.0 + kf + kf * s) * p);
    Ok(CriticalValue {
        k,
        s_k: Some(s),
        admissible: true,
        slope: Some(slope),
    })
}

/// Every admissible critical value for `2 ≤ k ≤ kmax`, by increasing `k`.
pub fn enumerate_sigma(dim: usize, radius: f64, kmax: usize) -> Result<Vec<CriticalValue>> {
    let mut out = Vec::new();
    for k in 2..=kmax {
        let cv = critical_value(k, dim, radius)?;
        if cv.admissible {
            out.push(cv);
        }
    }
    Ok(out)
}

/// The admissible `s_k` closest to `sigma`, if any.
pub fn nearest_critical(params: &ProblemParams, kmax: usize) -> Result<Option<CriticalValue>> {
    if params.is_one_phase() {
        return Ok(None);
    }
    let all = enumerate_sigma(params.dim, params.core_radius, kmax)?;
    Ok(all.into_iter().min_by(|a, b| {
        let da = (a.s_k.unwrap() - params.sigma).abs();
        let db = (b.s_k.unwrap() - params.sigma).abs();
        da.partial_cmp(&db).unwrap()
    }))
}
