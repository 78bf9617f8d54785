//! Exact generator for `Id × O(N-1)`-invariant harmonic polynomials.
//!
//! An invariant `k`-homogeneous polynomial is a combination of the monomials
//! `x_1^{2i+ε} |x'|^{2(j-i)}` (`k = 2j + ε`, `ε ∈ {0, 1}`). Harmonicity imposes `j`
//! linear conditions on the `j + 1` coefficients; the coefficients are derived here
//! from [`laplacian_of_monomial`] in exact rational arithmetic, and [`MultiPoly`]
//! provides an independent check by expanding into all `N` Cartesian variables.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// `x_1^a |x'|^{2b}` keyed by `(a, b)`.
pub type ReducedPoly = BTreeMap<(u32, u32), BigRational>;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `Δ(x_1^a |x'|^{2b})` in `R^N`, by the product rule with `div x' = N - 1`:
///
/// `a(a-1) x_1^{a-2}|x'|^{2b} + 2b(2b + N - 3) x_1^a |x'|^{2b-2}`.
pub fn laplacian_of_monomial(a: u32, b: u32, dim: usize) -> ReducedPoly {
    let mut out = ReducedPoly::new();
    if a >= 2 {
        out.insert((a - 2, b), rat(a as i64 * (a as i64 - 1)));
    }
    if b >= 1 {
        let b = b as i64;
        let c = 2 * b * (2 * b + dim as i64 - 3);
        if c != 0 {
            out.insert((a, b as u32 - 1), rat(c));
        }
    }
    out
}

/// Variant that drops the `2b(N-1)` contribution of `div x'`, giving `2b(2b-2)`
/// in place of `2b(2b + N - 3)`. Not a Laplacian for `b ≥ 1`; kept for comparison.
pub fn dimension_free_laplacian_of_monomial(a: u32, b: u32) -> ReducedPoly {
    let mut out = ReducedPoly::new();
    if a >= 2 {
        out.insert((a - 2, b), rat(a as i64 * (a as i64 - 1)));
    }
    if b >= 1 {
        let b = b as i64;
        let c = 2 * b * (2 * b - 2);
        if c != 0 {
            out.insert((a, b as u32 - 1), rat(c));
        }
    }
    out
}

/// `k = 2j + parity`.
fn split_degree(k: usize) -> (usize, u32) {
    (k / 2, (k % 2) as u32)
}

/// Exponents `(a, b)` of the `i`-th invariant monomial of degree `k`.
pub fn invariant_monomial(k: usize, i: usize) -> (u32, u32) {
    let (j, eps) = split_degree(k);
    (2 * i as u32 + eps, (j - i) as u32)
}

/// Matrix of `Δ` restricted to the invariant family: column `i` holds the
/// coefficients of `Δ(x_1^{2i+ε}|x'|^{2(j-i)})` on the `j` degree-`k-2` monomials.
pub fn harmonicity_system(k: usize, dim: usize) -> Vec<Vec<BigRational>> {
    let (j, _) = split_degree(k);
    let mut rows = vec![vec![BigRational::zero(); j + 1]; j];
    for i in 0..=j {
        let (a, b) = invariant_monomial(k, i);
        for ((ta, tb), c) in laplacian_of_monomial(a, b, dim) {
            // target monomial index: x_1^{2l+ε}|x'|^{2(j-1-l)}
            let l = (ta / 2) as usize;
            debug_assert_eq!(tb as usize, j - 1 - l);
            rows[l][i] += c;
        }
    }
    rows
}

/// Rank by fraction-exact Gaussian elimination.
pub fn exact_rank(matrix: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = matrix.to_vec();
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][c].clone();
        for r in 0..rows {
            if r != rank && !m[r][c].is_zero() {
                let f = &m[r][c] / &pivot;
                for cc in c..cols {
                    let v = &f * &m[rank][cc];
                    m[r][cc] -= v;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// An axially symmetric homogeneous polynomial `Σ a_i x_1^{2i+ε}|x'|^{2(j-i)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantHarmonicPoly {
    pub dim: usize,
    pub degree: usize,
    pub j: usize,
    pub coeffs: Vec<BigRational>,
}

impl InvariantHarmonicPoly {
    pub fn reduced(&self) -> ReducedPoly {
        let mut out = ReducedPoly::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                out.insert(invariant_monomial(self.degree, i), c.clone());
            }
        }
        out
    }

    /// Laplacian computed with the reduced-monomial rule.
    pub fn reduced_laplacian(&self) -> ReducedPoly {
        let mut out = ReducedPoly::new();
        for ((a, b), c) in self.reduced() {
            for (m, d) in laplacian_of_monomial(a, b, self.dim) {
                *out.entry(m).or_insert_with(BigRational::zero) += &c * d;
            }
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    /// Expand into the `N` Cartesian variables.
    pub fn expand(&self) -> MultiPoly {
        let mut out = MultiPoly::zero(self.dim);
        for ((a, b), c) in self.reduced() {
            let mut term = MultiPoly::monomial(self.dim, 0, a, c);
            let q = MultiPoly::transverse_square(self.dim);
            for _ in 0..b {
                term = term.mul(&q);
            }
            out = out.add(&term);
        }
        out
    }

    /// Value on the unit sphere at `x_1 = cos θ`, `|x'| = sin θ`.
    pub fn restrict_to_sphere(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let (p, q) = invariant_monomial(self.degree, i);
                to_f64(a) * c.powi(p as i32) * s.powi(2 * q as i32)
            })
            .sum()
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    let n: f64 = r.numer().to_string().parse().unwrap_or(f64::NAN);
    let d: f64 = r.denom().to_string().parse().unwrap_or(f64::NAN);
    n / d
}

/// The unique (up to scale) invariant harmonic polynomial of degree `k`,
/// normalized so that the coefficient of `x_1^k` is 1.
///
/// Column `l + 1` of [`harmonicity_system`] meets row `l` through the `x_1`-part
/// and column `l` through the `|x'|`-part, so the system is bidiagonal and
/// is solved from the top coefficient downwards.
pub fn invariant_harmonic_poly(k: usize, dim: usize) -> InvariantHarmonicPoly {
    assert!(k >= 1 && dim >= 2);
    let (j, _) = split_degree(k);
    let sys = harmonicity_system(k, dim);
    let mut coeffs = vec![BigRational::zero(); j + 1];
    coeffs[j] = BigRational::one();
    for l in (0..j).rev() {
        let upper = &sys[l][l + 1];
        let diag = &sys[l][l];
        assert!(!diag.is_zero(), "vanishing |x'| coefficient");
        coeffs[l] = -(upper * &coeffs[l + 1]) / diag;
    }
    InvariantHarmonicPoly {
        dim,
        degree: k,
        j,
        coeffs,
    }
}

/// Coefficients of the odd-degree recursion built on
/// [`dimension_free_laplacian_of_monomial`]:
/// `a_{l+1} = -2(j-l)(j-l-1) / ((2l+3)(l+1)) · a_l`, started from `a_0 = 1`.
pub fn dimension_free_recursion(k: usize, dim: usize) -> InvariantHarmonicPoly {
    let (j, _) = split_degree(k);
    let mut coeffs = vec![BigRational::one(); j + 1];
    for l in 0..j {
        let (jj, ll) = (j as i64, l as i64);
        let num = rat(-2 * (jj - ll) * (jj - ll - 1));
        let den = rat((2 * ll + 3) * (ll + 1));
        coeffs[l + 1] = &coeffs[l] * num / den;
    }
    InvariantHarmonicPoly {
        dim,
        degree: k,
        j,
        coeffs,
    }
}

/// Sparse polynomial in `x_1, …, x_N` with rational coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    pub dim: usize,
    pub terms: BTreeMap<Vec<u32>, BigRational>,
}

impl MultiPoly {
    pub fn zero(dim: usize) -> Self {
        MultiPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(dim: usize, var: usize, power: u32, coeff: BigRational) -> Self {
        let mut e = vec![0; dim];
        e[var] = power;
        let mut out = Self::zero(dim);
        if !coeff.is_zero() {
            out.terms.insert(e, coeff);
        }
        out
    }

    /// `|x'|² = x_2² + … + x_N²`.
    pub fn transverse_square(dim: usize) -> Self {
        let mut out = Self::zero(dim);
        for v in 1..dim {
            out = out.add(&Self::monomial(dim, v, 2, BigRational::one()));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            *out.terms.entry(e.clone()).or_insert_with(BigRational::zero) += c;
        }
        out.terms.retain(|_, v| !v.is_zero());
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_insert_with(BigRational::zero) += c1 * c2;
            }
        }
        out.terms.retain(|_, v| !v.is_zero());
        out
    }

    /// `Σ_i ∂²/∂x_i²`, term by term.
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            for i in 0..self.dim {
                let p = e[i];
                if p >= 2 {
                    let mut e2 = e.clone();
                    e2[i] -= 2;
                    *out.terms.entry(e2).or_insert_with(BigRational::zero) +=
                        c * rat(p as i64 * (p as i64 - 1));
                }
            }
        }
        out.terms.retain(|_, v| !v.is_zero());
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs_coeff(&self) -> BigRational {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::zonal_eval;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn monomial_laplacians() {
        let l = laplacian_of_monomial(2, 0, 3);
        assert_eq!(l.len(), 1);
        assert_eq!(l[&(0, 0)], rat(2));
        let l = laplacian_of_monomial(0, 1, 3);
        assert_eq!(l[&(0, 0)], rat(4));
        for dim in 2..=6 {
            let l = laplacian_of_monomial(1, 1, dim);
            assert_eq!(l.len(), 1);
            assert_eq!(l[&(1, 0)], rat(2 * (dim as i64 - 1)));
        }
    }

    #[test]
    fn monomial_rule_agrees_with_expansion() {
        for dim in 2..=5 {
            for a in 0..5u32 {
                for b in 0..4u32 {
                    // expand x_1^a |x'|^{2b} directly
                    let mut term = MultiPoly::monomial(dim, 0, a, BigRational::one());
                    for _ in 0..b {
                        term = term.mul(&MultiPoly::transverse_square(dim));
                    }
                    let mut want = MultiPoly::zero(dim);
                    for ((ta, tb), c) in laplacian_of_monomial(a, b, dim) {
                        let mut t = MultiPoly::monomial(dim, 0, ta, c);
                        for _ in 0..tb {
                            t = t.mul(&MultiPoly::transverse_square(dim));
                        }
                        want = want.add(&t);
                    }
                    assert_eq!(term.laplacian(), want, "dim {dim} a {a} b {b}");
                }
            }
        }
    }

    #[test]
    fn examples() {
        let p = invariant_harmonic_poly(1, 4);
        assert_eq!(p.coeffs, vec![rat(1)]);
        let p = invariant_harmonic_poly(3, 3);
        assert_eq!(p.coeffs, vec![q(-3, 2), rat(1)]);
        let p = invariant_harmonic_poly(2, 2);
        assert_eq!(p.coeffs, vec![rat(-1), rat(1)]);
    }

    #[test]
    fn generated_polynomials_are_harmonic() {
        for dim in 2..=5 {
            for k in 1..=10 {
                let p = invariant_harmonic_poly(k, dim);
                assert!(p.reduced_laplacian().is_empty());
                assert!(p.expand().laplacian().is_zero(), "dim {dim} k {k}");
            }
        }
    }

    #[test]
    fn solution_space_is_one_dimensional() {
        for dim in 2..=5 {
            for k in 1..=10 {
                let sys = harmonicity_system(k, dim);
                let cols = k / 2 + 1;
                assert_eq!(cols - exact_rank(&sys), 1, "dim {dim} k {k}");
            }
        }
    }

    #[test]
    fn restriction_matches_zonal_harmonic() {
        for dim in 2..=5 {
            for k in 1..=10 {
                let p = invariant_harmonic_poly(k, dim);
                let t0 = 0.0;
                let scale = zonal_eval(k, dim, 1.0) / p.restrict_to_sphere(t0);
                for i in 0..100 {
                    let th = std::f64::consts::PI * i as f64 / 99.0;
                    let a = scale * p.restrict_to_sphere(th);
                    let b = zonal_eval(k, dim, th.cos());
                    assert!((a - b).abs() < 1e-12, "dim {dim} k {k} θ {th}");
                }
            }
        }
        let p = invariant_harmonic_poly(3, 3);
        assert!((p.restrict_to_sphere(0.0) - 1.0).abs() < 1e-15);
        let p = invariant_harmonic_poly(2, 2);
        for th in [0.1, 0.9, 2.0] {
            assert!((p.restrict_to_sphere(th) - (2.0 * th).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_free_recursion_is_not_harmonic() {
        // Without the div x' term, k = 3 gives a_1 = 0, i.e. x_1|x'|²,
        // whose Laplacian is 2(N-1)x_1.
        for dim in 2..=5 {
            let p = dimension_free_recursion(3, dim);
            assert_eq!(p.coeffs, vec![rat(1), rat(0)]);
            assert!(!p.expand().laplacian().is_zero());
        }
        // k = 1 is trivially fine either way
        assert!(dimension_free_recursion(1, 3)
            .expand()
            .laplacian()
            .is_zero());
        // and the dimension-free rule differs from the expansion whenever b ≥ 1
        assert_ne!(
            dimension_free_laplacian_of_monomial(1, 1),
            laplacian_of_monomial(1, 1, 3)
        );
        assert_eq!(
            dimension_free_laplacian_of_monomial(3, 0),
            laplacian_of_monomial(3, 0, 3)
        );
    }
}
