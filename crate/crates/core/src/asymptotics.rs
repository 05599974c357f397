//! Polynomial form of the oscillator density and the large-`x` behaviour of
//! the Bohm acceleration.
//!
//! For a unit oscillator superposition of top level `M`,
//! `|psi(x, t)|^2 = exp(-x^2) P(x, t)` with `P` of degree `N = 2M`, and the
//! total acceleration `a = -d(V + Q)/dx` is a rational function of `P` and its
//! first three derivatives. At large `x` it behaves as
//! `a ~ -(b / x^2) cos(t - (theta_M - theta_{M-1}))`.

use std::io::{self, Write};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::quantum_state::{OscillatorSuperposition, OscillatorTerm, StateError, WaveFunction, DEFAULT_NODE_EPSILON};
use crate::special_functions::{factorial, hermite, PolynomialCoeffs, SpecialFunctionError, MAX_HERMITE_ORDER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error("asymptotic analysis needs the unit oscillator (mass = omega = 1)")]
    NotUnitOscillator,
    #[error("top level {level} exceeds the supported maximum {max}")]
    DegreeCap { level: usize, max: usize },
    #[error("P({x}) = {value} is not positive")]
    NonPositive { x: f64, value: f64 },
    #[error("coefficient is not finite")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    SpecialFunction(#[from] SpecialFunctionError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Highest oscillator level the density expansion accepts (`N = 12`).
pub const MAX_ASYMPTOTIC_LEVEL: usize = MAX_HERMITE_ORDER / 2;

/// `P(x, t) = sum_n alpha_n x^n` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPolynomial {
    pub alphas: Vec<f64>,
    pub t: f64,
}

impl DensityPolynomial {
    pub fn degree(&self) -> usize {
        self.alphas.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        *self.alphas.last().unwrap_or(&0.0)
    }

    pub fn polynomial(&self) -> PolynomialCoeffs {
        PolynomialCoeffs::new(self.alphas.clone())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.polynomial().eval(x)
    }

    /// `exp(-x^2) P(x)`.
    pub fn density(&self, x: f64) -> f64 {
        (-x * x).exp() * self.eval(x)
    }

    /// Exact rational copy of the (binary floating-point) coefficients.
    pub fn exact_alphas(&self) -> Result<Vec<BigRational>, AsymptoticsError> {
        self.alphas
            .iter()
            .map(|&a| BigRational::from_f64(a).ok_or(AsymptoticsError::NonFinite))
            .collect()
    }
}

fn check_unit(state: &OscillatorSuperposition) -> Result<(), AsymptoticsError> {
    if !state.is_unit() {
        return Err(AsymptoticsError::NotUnitOscillator);
    }
    let top = state.top_level();
    if top > MAX_ASYMPTOTIC_LEVEL {
        return Err(AsymptoticsError::DegreeCap {
            level: top,
            max: MAX_ASYMPTOTIC_LEVEL,
        });
    }
    Ok(())
}

/// Prefactor polynomial of `phi_m = h_m(x) exp(-x^2/2)` for the unit oscillator.
fn hermite_function_prefactor(m: usize) -> Result<PolynomialCoeffs, AsymptoticsError> {
    let norm = std::f64::consts::PI.powf(-0.25) / (2f64.powi(m as i32) * factorial(m)).sqrt();
    Ok(hermite(m)?.scale(norm))
}

/// Expands `|psi(x, t)|^2 exp(x^2)` into monomial coefficients.
pub fn density_polynomial(state: &OscillatorSuperposition, t: f64) -> Result<DensityPolynomial, AsymptoticsError> {
    check_unit(state)?;
    let terms: Vec<(usize, Complex64)> = state
        .terms()
        .iter()
        .filter(|term| term.coeff.norm_sqr() > 0.0)
        .map(|term| {
            let m = term.levels[0];
            (m, term.coeff * Complex64::from_polar(1.0, -(m as f64 + 0.5) * t))
        })
        .collect();
    let prefactors = terms
        .iter()
        .map(|(m, _)| hermite_function_prefactor(*m))
        .collect::<Result<Vec<_>, _>>()?;
    let mut p = PolynomialCoeffs::zero();
    for (i, (_, ci)) in terms.iter().enumerate() {
        p = p.add(&prefactors[i].mul(&prefactors[i]).scale(ci.norm_sqr()));
        for (j, (_, cj)) in terms.iter().enumerate().skip(i + 1) {
            let w = 2.0 * (ci * cj.conj()).re;
            p = p.add(&prefactors[i].mul(&prefactors[j]).scale(w));
        }
    }
    let mut alphas = p.coeffs().to_vec();
    let n = 2 * state.top_level();
    alphas.resize(n + 1, 0.0);
    Ok(DensityPolynomial { alphas, t })
}

/// `a = [P^2 P''' + P'^3 - 2 P P' P'' - 2x P^2 P'' - 2 P^2 P' + 2x P P'^2] / (4 P^3)`,
/// evaluated through the ratios `P^(k)/P` so that large `x` does not overflow.
pub fn rational_acceleration(poly: &DensityPolynomial, x: f64) -> Result<f64, AsymptoticsError> {
    let p0 = poly.polynomial();
    let p1 = p0.derivative();
    let p2 = p1.derivative();
    let p3 = p2.derivative();
    let value = p0.eval(x);
    if !(value > 0.0) {
        return Err(AsymptoticsError::NonPositive { x, value });
    }
    let (r1, r2, r3) = (p1.eval(x) / value, p2.eval(x) / value, p3.eval(x) / value);
    Ok((r3 + r1 * r1 * r1 - 2.0 * r1 * r2 - 2.0 * x * r2 - 2.0 * r1 + 2.0 * x * r1 * r1) / 4.0)
}

fn int<T: FromPrimitive>(k: i64) -> T {
    T::from_i64(k).expect("small integers are representable")
}

fn poly_mul<T: Clone + Zero + std::ops::Mul<Output = T>>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + ai.clone() * bj.clone();
        }
    }
    out
}

fn poly_derivative<T: Clone + Zero + std::ops::Mul<Output = T> + FromPrimitive>(a: &[T]) -> Vec<T> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c.clone() * int::<T>(k as i64))
        .collect()
}

fn poly_axpy<T: Clone + Zero + std::ops::Mul<Output = T>>(acc: &mut Vec<T>, scale: T, p: &[T], shift: usize) {
    if acc.len() < p.len() + shift {
        acc.resize(p.len() + shift, T::zero());
    }
    for (k, c) in p.iter().enumerate() {
        acc[k + shift] = acc[k + shift].clone() + scale.clone() * c.clone();
    }
}

/// Coefficients of the numerator of the rational acceleration, generic over
/// the coefficient field.
pub fn acceleration_numerator<T>(alphas: &[T]) -> Vec<T>
where
    T: Clone + Zero + std::ops::Mul<Output = T> + FromPrimitive,
{
    let p = alphas.to_vec();
    let d1 = poly_derivative(&p);
    let d2 = poly_derivative(&d1);
    let d3 = poly_derivative(&d2);
    let pp = poly_mul(&p, &p);
    let mut num = Vec::new();
    poly_axpy(&mut num, int::<T>(1), &poly_mul(&pp, &d3), 0);
    poly_axpy(&mut num, int::<T>(1), &poly_mul(&poly_mul(&d1, &d1), &d1), 0);
    poly_axpy(&mut num, int::<T>(-2), &poly_mul(&poly_mul(&p, &d1), &d2), 0);
    poly_axpy(&mut num, int::<T>(-2), &poly_mul(&pp, &d2), 1);
    poly_axpy(&mut num, int::<T>(-2), &poly_mul(&pp, &d1), 0);
    poly_axpy(&mut num, int::<T>(2), &poly_mul(&p, &poly_mul(&d1, &d1)), 1);
    num
}

/// Exact rational numerator coefficients.
pub fn exact_numerator(poly: &DensityPolynomial) -> Result<Vec<BigRational>, AsymptoticsError> {
    Ok(acceleration_numerator(&poly.exact_alphas()?))
}

/// Coefficient of `x^k` in an exact numerator (zero past the end).
pub fn exact_coefficient(num: &[BigRational], k: usize) -> BigRational {
    num.get(k).cloned().unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticBound {
    pub b: f64,
    /// `theta_M - theta_{M-1}`; the leading term is `-(b/x^2) cos(t - phase_offset)`.
    pub phase_offset: f64,
    /// Set when `c_{M-1} = 0`, so the leading `1/x^2` term is absent.
    pub degenerate: bool,
    pub top_level: usize,
}

impl AsymptoticBound {
    /// Leading behaviour of `a x^2`.
    pub fn leading(&self, t: f64) -> f64 {
        if self.degenerate {
            0.0
        } else {
            -self.b * (t - self.phase_offset).cos()
        }
    }
}

/// `b = (|c_{M-1}| / |c_M|) sqrt(M / 2)`.
pub fn asymptotic_bound(state: &OscillatorSuperposition) -> Result<AsymptoticBound, AsymptoticsError> {
    check_unit(state)?;
    let m = state.top_level();
    let cm = state.amplitude(m);
    if cm.norm_sqr() == 0.0 {
        return Err(AsymptoticsError::InvalidParameter("state has no nonzero amplitude".into()));
    }
    let below = if m > 0 { state.amplitude(m - 1) } else { Complex64::zero() };
    let degenerate = below.norm_sqr() == 0.0;
    Ok(AsymptoticBound {
        b: if degenerate { 0.0 } else { below.norm() / cm.norm() * (m as f64 / 2.0).sqrt() },
        phase_offset: if degenerate { 0.0 } else { cm.arg() - below.arg() },
        degenerate,
        top_level: m,
    })
}

/// Sample grid for bound verification.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundGrid {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

impl BoundGrid {
    /// `nx` interior points of `(x_lo, x_hi)` and `nt` of `(0, 2 pi)`, endpoints excluded.
    pub fn open_uniform(x_lo: f64, x_hi: f64, nx: usize, nt: usize) -> Self {
        let interior = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
        };
        Self {
            x: interior(x_lo, x_hi, nx),
            t: interior(0.0, 2.0 * std::f64::consts::PI, nt),
        }
    }

    /// Log-spaced `x` from `x_lo` to `x_hi` inclusive and `nt` times in `[0, 2 pi)`.
    pub fn log_spaced(x_lo: f64, x_hi: f64, nx: usize, nt: usize) -> Self {
        let (a, b) = (x_lo.ln(), x_hi.ln());
        Self {
            x: (0..nx).map(|i| (a + (b - a) * i as f64 / (nx - 1).max(1) as f64).exp()).collect(),
            t: (0..nt).map(|j| 2.0 * std::f64::consts::PI * j as f64 / nt as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub b_check: f64,
    /// Minimum of `a + b_check / x^2` over evaluable grid points.
    pub min_margin: f64,
    pub argmin: (f64, f64),
    /// Minimum of `a x^2 + b_check`.
    pub min_scaled: f64,
    pub evaluated: usize,
    pub excluded: Vec<(f64, f64)>,
    /// `max_t |a x^2 - leading(t)|` at the largest grid `x`, when nondegenerate.
    pub asymptotic_residual: Option<f64>,
    /// Rows `(x, t, a)`.
    pub rows: Vec<(f64, f64, f64)>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.evaluated > 0 && self.min_margin > 0.0
    }

    /// Grid CSV: `x,t,a,a_plus_bound` where the last column is `a + b_check/x^2`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,t,a,a_plus_bound")?;
        for &(x, t, a) in &self.rows {
            writeln!(out, "{x:.12e},{t:.12e},{a:.12e},{:.12e}", a + self.b_check / (x * x))?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "points evaluated: {}\nexcluded (node): {}\nmin(a + {}/x^2) = {:.6e} at x = {:.6}, t = {:.6}\nmin(a x^2 + {}) = {:.6e}\n",
            self.evaluated,
            self.excluded.len(),
            self.b_check,
            self.min_margin,
            self.argmin.0,
            self.argmin.1,
            self.b_check,
            self.min_scaled
        );
        if let Some(r) = self.asymptotic_residual {
            s.push_str(&format!("asymptotic residual at largest x: {r:.6e}\n"));
        }
        s.push_str(if self.holds() { "bound: PASS\n" } else { "bound: FAIL\n" });
        s
    }
}

/// Evaluates `a` on a grid via the density polynomial, excluding points the
/// state marks as nodes, and reports the minimum of `a + b_check / x^2`.
pub fn verify_bound(state: &OscillatorSuperposition, grid: &BoundGrid, b_check: f64) -> Result<BoundReport, AsymptoticsError> {
    check_unit(state)?;
    if grid.x.is_empty() || grid.t.is_empty() {
        return Err(AsymptoticsError::InvalidParameter("empty grid".into()));
    }
    if grid.x.iter().any(|x| !(*x > 0.0)) {
        return Err(AsymptoticsError::InvalidParameter("bound grid needs positive x".into()));
    }
    let polys = grid
        .t
        .iter()
        .map(|&t| density_polynomial(state, t))
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<Option<(f64, f64, f64)>> = grid
        .t
        .par_iter()
        .zip(&polys)
        .flat_map_iter(|(&t, poly)| {
            grid.x.iter().map(move |&x| {
                if state.local(&[x], t).is_node(DEFAULT_NODE_EPSILON) {
                    return None;
                }
                rational_acceleration(poly, x).ok().map(|a| (x, t, a))
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(cells.len());
    let mut excluded = Vec::new();
    let mut k = 0;
    for &t in &grid.t {
        for &x in &grid.x {
            match cells[k] {
                Some(row) => rows.push(row),
                None => excluded.push((x, t)),
            }
            k += 1;
        }
    }
    let mut min_margin = f64::INFINITY;
    let mut min_scaled = f64::INFINITY;
    let mut argmin = (f64::NAN, f64::NAN);
    for &(x, t, a) in &rows {
        let margin = a + b_check / (x * x);
        if margin < min_margin {
            min_margin = margin;
            argmin = (x, t);
        }
        min_scaled = min_scaled.min(a * x * x + b_check);
    }
    let bound = asymptotic_bound(state)?;
    let x_max = grid.x.iter().copied().fold(f64::MIN, f64::max);
    let asymptotic_residual = (!bound.degenerate).then(|| {
        rows.iter()
            .filter(|r| r.0 == x_max)
            .map(|&(x, t, a)| (a * x * x - bound.leading(t)).abs())
            .fold(0.0, f64::max)
    });
    Ok(BoundReport {
        b_check,
        min_margin,
        argmin,
        min_scaled,
        evaluated: rows.len(),
        excluded,
        asymptotic_residual,
        rows,
    })
}

/// `max_t |a x^2 - leading(t)|` at one `x`, using the corrected phase.
pub fn asymptotic_residual(state: &OscillatorSuperposition, x: f64, times: &[f64]) -> Result<f64, AsymptoticsError> {
    let bound = asymptotic_bound(state)?;
    let mut worst: f64 = 0.0;
    for &t in times {
        let a = rational_acceleration(&density_polynomial(state, t)?, x)?;
        worst = worst.max((a * x * x - bound.leading(t)).abs());
    }
    Ok(worst)
}

/// Least-squares slope of `log max_t |a(x, t)|` against `log x`. Returns
/// `None` when `a` vanishes identically on the ladder.
pub fn decay_slope(state: &OscillatorSuperposition, xs: &[f64], times: &[f64]) -> Result<Option<f64>, AsymptoticsError> {
    let polys = times
        .iter()
        .map(|&t| density_polynomial(state, t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut pts = Vec::new();
    for &x in xs {
        let mut env: f64 = 0.0;
        for p in &polys {
            env = env.max(rational_acceleration(p, x)?.abs());
        }
        if env > 0.0 {
            pts.push((x.ln(), env.ln()));
        }
    }
    if pts.len() < 2 {
        return Ok(None);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(Some(sxy / sxx))
}

/// Random normalized unit-oscillator superposition with top level in
/// `1..=max_level` and every lower level populated (so `c_{M-1} != 0`).
pub fn random_superposition(seed: u64, index: u64, max_level: usize) -> Result<OscillatorSuperposition, AsymptoticsError> {
    if max_level == 0 || max_level > MAX_ASYMPTOTIC_LEVEL {
        return Err(AsymptoticsError::DegreeCap {
            level: max_level,
            max: MAX_ASYMPTOTIC_LEVEL,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let top = rng.random_range(1..=max_level);
    let terms = (0..=top)
        .map(|m| {
            let r: f64 = rng.random_range(0.2..1.0);
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            OscillatorTerm::polar(m, r, theta)
        })
        .collect();
    Ok(OscillatorSuperposition::normalized(terms, 1.0, 1.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_state::{acceleration, PotentialSpec};
    use std::f64::consts::PI;

    #[test]
    fn ground_state_polynomial_is_constant() {
        let p = density_polynomial(&OscillatorSuperposition::ground(), 0.7).unwrap();
        assert_eq!(p.degree(), 0);
        assert!((p.alphas[0] - 1.0 / PI.sqrt()).abs() < 1e-15);
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(rational_acceleration(&p, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn reconstruction_matches_direct_density() {
        for k in 0..8 {
            let st = random_superposition(77, k, 6).unwrap();
            for t in [0.0, 0.9, 4.0] {
                let poly = density_polynomial(&st, t).unwrap();
                for i in 0..=40 {
                    let x = -10.0 + 0.5 * i as f64;
                    let direct = st.local(&[x], t).density();
                    let rebuilt = poly.density(x);
                    assert!((rebuilt - direct).abs() <= 1e-12 * direct.max(1e-300), "x={x} {rebuilt} {direct}");
                }
            }
        }
    }

    #[test]
    fn leading_coefficient_closed_form() {
        for k in 0..10 {
            let st = random_superposition(3, k, 6).unwrap();
            let m = st.top_level();
            let cm = st.amplitude(m).norm_sqr();
            let lead_h = 2f64.powi(m as i32);
            let expected = cm / PI.sqrt() / (2f64.powi(m as i32) * factorial(m)) * lead_h * lead_h;
            let poly = density_polynomial(&st, 1.3).unwrap();
            assert!(poly.leading() > 0.0);
            assert!((poly.leading() / expected - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn subleading_coefficient_oscillates_with_corrected_phase() {
        for k in 0..6 {
            let st = random_superposition(9, k, 6).unwrap();
            let m = st.top_level();
            let (cm, cm1) = (st.amplitude(m), st.amplitude(m - 1));
            let prefactor = 2.0 * cm.norm() * cm1.norm() * 2f64.powi(2 * m as i32 - 1)
                / (PI.sqrt() * (2f64.powi(2 * m as i32 - 1) * factorial(m) * factorial(m - 1)).sqrt());
            let offset = cm.arg() - cm1.arg();
            for t in [0.0, PI / 2.0, PI] {
                let poly = density_polynomial(&st, t).unwrap();
                let expected = prefactor * (t - offset).cos();
                assert!((poly.alphas[2 * m - 1] - expected).abs() < 1e-12 * prefactor);
            }
        }
    }

    #[test]
    fn rational_form_matches_state_acceleration() {
        let st = OscillatorSuperposition::equal_three_level(1.1, 1.8);
        let pot = PotentialSpec::unit_oscillator();
        for (x, t) in [(0.3, 0.2), (-1.7, 2.5), (2.2, 5.0), (4.0, 1.0)] {
            let poly = density_polynomial(&st, t).unwrap();
            let a = rational_acceleration(&poly, x).unwrap();
            let b = acceleration(&st, &pot, &[x], t, 1.0, 1e-12).unwrap()[0];
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3), "{a} {b}");
        }
    }

    #[test]
    fn top_numerator_coefficient_vanishes_exactly() {
        for k in 0..5 {
            let st = random_superposition(21, k, 6).unwrap();
            let poly = density_polynomial(&st, 0.4).unwrap();
            let n = poly.degree();
            let num = exact_numerator(&poly).unwrap();
            assert!(exact_coefficient(&num, 3 * n - 1).is_zero());
            // next coefficient is -2 alpha_N^2 alpha_{N-1}
            let a = poly.exact_alphas().unwrap();
            let expected = BigRational::from_integer((-2).into()) * a[n].clone() * a[n].clone() * a[n - 1].clone();
            assert_eq!(exact_coefficient(&num, 3 * n - 2), expected);
        }
    }

    #[test]
    fn equal_weights_give_unit_b() {
        let b = asymptotic_bound(&OscillatorSuperposition::equal_three_level(1.1, 1.8)).unwrap();
        assert!((b.b - 1.0).abs() < 1e-14);
        assert!(!b.degenerate);
        assert!((b.phase_offset - 0.7).abs() < 1e-14);
    }

    #[test]
    fn degenerate_cases() {
        let gap = OscillatorSuperposition::normalized(
            vec![OscillatorTerm::polar(0, 1.0, 0.0), OscillatorTerm::polar(2, 1.0, 0.5)],
            1.0,
            1.0,
        )
        .unwrap();
        let b = asymptotic_bound(&gap).unwrap();
        assert!(b.degenerate);
        assert_eq!(b.b, 0.0);
        let xs: Vec<f64> = (0..8).map(|i| 20.0 * 1.5f64.powi(i)).collect();
        let ts: Vec<f64> = (0..16).map(|j| j as f64 * PI / 8.0).collect();
        let slope = decay_slope(&gap, &xs, &ts).unwrap().unwrap();
        assert!(slope <= -3.0 + 1e-6, "{slope}");

        let pure = OscillatorSuperposition::from_polar(&[(3, 1.0, 0.2)]).unwrap();
        assert!(asymptotic_bound(&pure).unwrap().degenerate);
    }

    #[test]
    fn residual_decays_like_one_over_x() {
        let st = random_superposition(5, 2, 6).unwrap();
        let ts: Vec<f64> = (0..16).map(|j| j as f64 * PI / 8.0).collect();
        let r2 = asymptotic_residual(&st, 1e2, &ts).unwrap();
        let r3 = asymptotic_residual(&st, 1e3, &ts).unwrap();
        assert!(r3 < r2 / 5.0, "{r2} {r3}");
    }
}
