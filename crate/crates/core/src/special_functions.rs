//! Orthogonal polynomials and angular functions used to build every wave
//! function in the crate.
//!
//! Polynomials are stored as dense coefficient vectors (index = power) and
//! evaluated with Horner's rule. Hermite polynomials are capped at order
//! [`MAX_HERMITE_ORDER`]; above that the integer coefficients start to lose
//! their exact representation once products are formed, so requests are
//! rejected instead of silently degraded.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// Highest Hermite order accepted by [`hermite`].
pub const MAX_HERMITE_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFunctionError {
    #[error("Hermite order {order} exceeds the supported cap of {cap}")]
    DegreeCap { order: usize, cap: usize },
    #[error("spherical harmonic requires |m| <= l, got l = {l}, m = {m}")]
    InvalidOrder { l: usize, m: i64 },
}

/// Real polynomial in one variable, `coeffs[k]` multiplies `x^k`.
///
/// Trailing zeros are trimmed so that `degree()` is meaningful; the zero
/// polynomial is stored as an empty vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialCoeffs {
    coeffs: Vec<f64>,
}

impl PolynomialCoeffs {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the polynomial; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `x^k` (zero beyond the stored degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Multiply by `x`.
    pub fn shift(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend_from_slice(&self.coeffs);
        Self::new(coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }
}

/// Physicists' Hermite polynomial with exact integer coefficients.
pub fn hermite_integer(m: usize) -> Result<Vec<i64>, SpecialFunctionError> {
    if m > MAX_HERMITE_ORDER {
        return Err(SpecialFunctionError::DegreeCap {
            order: m,
            cap: MAX_HERMITE_ORDER,
        });
    }
    // H_{k+1} = 2x H_k - 2k H_{k-1}
    let mut prev: Vec<i64> = vec![1];
    if m == 0 {
        return Ok(prev);
    }
    let mut cur: Vec<i64> = vec![0, 2];
    for k in 1..m {
        let mut next = vec![0i64; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2 * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= 2 * k as i64 * c;
        }
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Physicists' Hermite polynomial `H_m`, leading coefficient `2^m`.
pub fn hermite(m: usize) -> Result<PolynomialCoeffs, SpecialFunctionError> {
    let ints = hermite_integer(m)?;
    Ok(PolynomialCoeffs::new(ints.into_iter().map(|c| c as f64).collect()))
}

/// Generalized Laguerre polynomial `L_k^(alpha)` built from the three-term
/// recurrence `(k+1) L_{k+1} = (2k+1+alpha-x) L_k - (k+alpha) L_{k-1}`.
pub fn associated_laguerre(k: usize, alpha: f64) -> PolynomialCoeffs {
    let mut prev = PolynomialCoeffs::constant(1.0);
    if k == 0 {
        return prev;
    }
    let mut cur = PolynomialCoeffs::new(vec![1.0 + alpha, -1.0]);
    for j in 1..k {
        let jf = j as f64;
        let linear = PolynomialCoeffs::new(vec![2.0 * jf + 1.0 + alpha, -1.0]);
        let next = linear
            .mul(&cur)
            .sub(&prev.scale(jf + alpha))
            .scale(1.0 / (jf + 1.0));
        prev = cur;
        cur = next;
    }
    cur
}

/// Legendre polynomial `P_l` from Bonnet's recurrence.
pub fn legendre(l: usize) -> PolynomialCoeffs {
    let mut prev = PolynomialCoeffs::constant(1.0);
    if l == 0 {
        return prev;
    }
    let mut cur = PolynomialCoeffs::new(vec![0.0, 1.0]);
    for n in 1..l {
        let nf = n as f64;
        let next = cur
            .shift()
            .scale(2.0 * nf + 1.0)
            .sub(&prev.scale(nf))
            .scale(1.0 / (nf + 1.0));
        prev = cur;
        cur = next;
    }
    cur
}

/// Associated Legendre function `P_l^m(x)` for `0 <= m <= l`, including the
/// Condon-Shortley factor `(-1)^m`.
pub fn associated_legendre(l: usize, m: usize, x: f64) -> f64 {
    debug_assert!(m <= l);
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= -fact * somx2;
        fact += 2.0;
    }
    if l == m {
        return pmm;
    }
    let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = (x * (2 * ll - 1) as f64 * pmmp1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}

/// `sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!)` for `m >= 0`.
pub fn spherical_harmonic_norm(l: usize, m: usize) -> f64 {
    let mut ratio = 1.0;
    for k in (l - m + 1)..=(l + m) {
        ratio /= k as f64;
    }
    ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}

/// Orthonormal complex spherical harmonic `Y_l^m(theta, phi)` with the
/// Condon-Shortley phase; negative `m` uses `Y_l^{-m} = (-1)^m conj(Y_l^m)`.
pub fn spherical_harmonic(
    l: usize,
    m: i64,
    theta: f64,
    phi: f64,
) -> Result<Complex64, SpecialFunctionError> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(SpecialFunctionError::InvalidOrder { l, m });
    }
    let magnitude = spherical_harmonic_norm(l, am) * associated_legendre(l, am, theta.cos());
    let y = Complex64::from_polar(magnitude, am as f64 * phi);
    if m >= 0 {
        Ok(y)
    } else if am % 2 == 0 {
        Ok(y.conj())
    } else {
        Ok(-y.conj())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // direct recurrence on values, independent of the coefficient path
    fn hermite_value(m: usize, x: f64) -> f64 {
        let (mut a, mut b) = (1.0, 2.0 * x);
        if m == 0 {
            return a;
        }
        for k in 1..m {
            let c = 2.0 * x * b - 2.0 * k as f64 * a;
            a = b;
            b = c;
        }
        b
    }

    #[test]
    fn hermite_small_orders() {
        assert_eq!(hermite(0).unwrap().coeffs(), &[1.0]);
        assert_eq!(hermite(2).unwrap().eval(1.0), 2.0);
        assert_eq!(hermite(3).unwrap().eval(2.0), 40.0);
        assert_eq!(hermite_value(3, 2.0), 40.0);
        for m in 0..=MAX_HERMITE_ORDER {
            let h = hermite(m).unwrap();
            assert_eq!(h.degree(), m);
            assert_eq!(h.leading(), 2f64.powi(m as i32));
            for x in [-1.7, -0.3, 0.0, 0.9, 2.4] {
                assert_relative_eq!(h.eval(x), hermite_value(m, x), max_relative = 1e-12, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn hermite_parity_and_leading_ratio() {
        for m in 0..=MAX_HERMITE_ORDER {
            let h = hermite(m).unwrap();
            for (k, c) in h.coeffs().iter().enumerate() {
                if (k + m) % 2 == 1 {
                    assert_eq!(*c, 0.0);
                }
            }
            for x in [0.25, 1.0, 3.5] {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(h.eval(-x), sign * h.eval(x));
            }
        }
        for m in 1..=MAX_HERMITE_ORDER {
            let lo = hermite(m - 1).unwrap().coeff(m - 1);
            let hi = hermite(m).unwrap().coeff(m);
            assert_eq!(lo, 0.5 * hi);
        }
    }

    #[test]
    fn hermite_cap_is_enforced() {
        assert_eq!(
            hermite(13),
            Err(SpecialFunctionError::DegreeCap { order: 13, cap: 12 })
        );
    }

    #[test]
    fn hermite_orthogonality() {
        // composite Simpson on [-12, 12]; integrand decays like e^{-x^2}
        let n = 6000;
        let (lo, hi) = (-12.0, 12.0);
        let h = (hi - lo) / n as f64;
        for a in 0..=10 {
            for b in 0..=10 {
                let ha = hermite(a).unwrap();
                let hb = hermite(b).unwrap();
                let f = |x: f64| ha.eval(x) * hb.eval(x) * (-x * x).exp();
                let mut s = f(lo) + f(hi);
                for i in 1..n {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * f(lo + i as f64 * h);
                }
                s *= h / 3.0;
                let expected = if a == b {
                    PI.sqrt() * 2f64.powi(a as i32) * factorial(a)
                } else {
                    0.0
                };
                let scale = PI.sqrt() * 2f64.powi(a.max(b) as i32) * factorial(a.max(b));
                assert!((s - expected).abs() / scale < 1e-10, "a={a} b={b} {s} {expected}");
            }
        }
    }

    #[test]
    fn laguerre_examples() {
        assert_eq!(associated_laguerre(0, 1.0).coeffs(), &[1.0]);
        assert_relative_eq!(associated_laguerre(1, 0.0).eval(2.0), -1.0);
        assert_relative_eq!(associated_laguerre(2, 1.0).eval(0.0), 3.0);
    }

    #[test]
    fn laguerre_matches_closed_form() {
        // L_k^a(x) = sum_i (-1)^i binom(k+a, k-i) x^i / i!
        fn gbinom(n: f64, k: usize) -> f64 {
            (0..k).fold(1.0, |acc, j| acc * (n - j as f64) / (j + 1) as f64)
        }
        for k in 0..8 {
            for alpha in [0.0, 1.0, 2.5, 5.0] {
                let p = associated_laguerre(k, alpha);
                for i in 0..=k {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    let expected = sign * gbinom(k as f64 + alpha, k - i) / factorial(i);
                    assert_relative_eq!(p.coeff(i), expected, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn spherical_harmonic_examples() {
        let y00 = spherical_harmonic(0, 0, 0.7, 2.1).unwrap();
        assert_relative_eq!(y00.re, 1.0 / (4.0 * PI).sqrt(), max_relative = 1e-14);
        assert_eq!(y00.im, 0.0);
        let y10 = spherical_harmonic(1, 0, PI / 2.0, 0.3).unwrap();
        assert!(y10.norm() < 1e-16);
        let y11 = spherical_harmonic(1, 1, PI / 2.0, 0.0).unwrap();
        assert_relative_eq!(y11.re, -(3.0 / (8.0 * PI)).sqrt(), max_relative = 1e-14);
        assert!(spherical_harmonic(1, 2, 0.1, 0.1).is_err());
        assert!(spherical_harmonic(2, -3, 0.1, 0.1).is_err());
    }

    #[test]
    fn spherical_harmonic_orthonormality() {
        // Gauss-Legendre in cos(theta) is exact for these degrees, the uniform
        // phi grid is exact for |m - m'| < np
        let (nodes, wts) = gauss_legendre(16);
        let np = 16;
        let mut pairs = Vec::new();
        for l in 0..=4usize {
            for m in -(l as i64)..=(l as i64) {
                pairs.push((l, m));
            }
        }
        let mut grid = Vec::new();
        for (u, wu) in nodes.iter().zip(&wts) {
            for j in 0..np {
                let phi = j as f64 * 2.0 * PI / np as f64;
                grid.push((u.acos(), phi, wu * 2.0 * PI / np as f64));
            }
        }
        let values: Vec<Vec<Complex64>> = pairs
            .iter()
            .map(|&(l, m)| {
                grid.iter()
                    .map(|&(theta, phi, _)| spherical_harmonic(l, m, theta, phi).unwrap())
                    .collect()
            })
            .collect();
        for a in 0..pairs.len() {
            for b in a..pairs.len() {
                let s: Complex64 = values[a]
                    .iter()
                    .zip(&values[b])
                    .zip(&grid)
                    .map(|((x, y), g)| x.conj() * y * g.2)
                    .sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((s - expected).norm() < 1e-8, "{:?} {:?} {s}", pairs[a], pairs[b]);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let expected = if k % 2 == 0 { 2.0 / (k + 1) as f64 } else { 0.0 };
            assert_relative_eq!(s, expected, epsilon = 1e-14);
        }
    }
}
