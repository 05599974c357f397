use std::collections::HashSet;

use num_complex::Complex64;

use super::{check_norm, LocalWave, PotentialSpec, StateError, WaveFunction};
use crate::special_functions::{associated_laguerre, factorial, legendre, spherical_harmonic_norm, PolynomialCoeffs};

/// `(n, l, m)` eigenstate of hydrogen with its amplitude at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydrogenTerm {
    pub n: usize,
    pub l: usize,
    pub m: i64,
    pub coeff: Complex64,
}

/// Precomputed pieces of `phi_nlm = g(r) * S_lm(x, y, z)` where `S_lm` is the
/// regular solid harmonic `r^l Y_lm` and
/// `g(r) = K exp(-r/n) L_{n-l-1}^{2l+1}(2r/n)`.
#[derive(Debug, Clone)]
struct Eigenstate {
    n: f64,
    l: usize,
    m_abs: usize,
    negative_m: bool,
    radial_norm: f64,
    laguerre: [PolynomialCoeffs; 3],
    angular_norm: f64,
    // m_abs-th derivative of P_l; S = C (x + iy)^|m| sum_i p_i z^i (r^2)^{(d-i)/2}
    legendre_derivative: PolynomialCoeffs,
    energy: f64,
}

struct EigenValue {
    phi: Complex64,
    grad: [Complex64; 3],
    laplacian: Complex64,
}

impl Eigenstate {
    fn new(n: usize, l: usize, m: i64) -> Self {
        let nf = n as f64;
        let m_abs = m.unsigned_abs() as usize;
        let radial_norm = ((2.0 / nf).powi(3) * factorial(n - l - 1) / (2.0 * nf * factorial(n + l))).sqrt()
            * (2.0 / nf).powi(l as i32);
        let lag = associated_laguerre(n - l - 1, (2 * l + 1) as f64);
        let lag1 = lag.derivative();
        let lag2 = lag1.derivative();
        let mut pd = legendre(l);
        for _ in 0..m_abs {
            pd = pd.derivative();
        }
        let sign = if m_abs % 2 == 0 { 1.0 } else { -1.0 };
        Self {
            n: nf,
            l,
            m_abs,
            negative_m: m < 0,
            radial_norm,
            laguerre: [lag, lag1, lag2],
            angular_norm: sign * spherical_harmonic_norm(l, m_abs),
            legendre_derivative: pd,
            energy: -0.5 / (nf * nf),
        }
    }

    /// `r^l Y_lm` and its Cartesian gradient.
    fn solid_harmonic(&self, p: &[f64; 3]) -> (Complex64, [Complex64; 3]) {
        let [x, y, z] = *p;
        let r2 = x * x + y * y + z * z;
        let d = self.l - self.m_abs;
        // W(z, r^2) and its partials
        let (mut w, mut w_z, mut w_r2) = (0.0, 0.0, 0.0);
        for (i, &c) in self.legendre_derivative.coeffs().iter().enumerate() {
            if c == 0.0 || (d - i) % 2 == 1 {
                continue;
            }
            let k = ((d - i) / 2) as i32;
            let zi = z.powi(i as i32);
            w += c * zi * r2.powi(k);
            if i > 0 {
                w_z += c * i as f64 * z.powi(i as i32 - 1) * r2.powi(k);
            }
            if k > 0 {
                w_r2 += c * zi * k as f64 * r2.powi(k - 1);
            }
        }
        let wx = 2.0 * x * w_r2;
        let wy = 2.0 * y * w_r2;
        let wz = w_z + 2.0 * z * w_r2;

        let base = Complex64::new(x, y);
        let m = self.m_abs as i32;
        let pow_m = base.powi(m);
        let pow_m1 = if m > 0 { base.powi(m - 1) * m as f64 } else { Complex64::default() };
        let c = self.angular_norm;
        let s = c * pow_m * w;
        let gx = c * (pow_m1 * w + pow_m * wx);
        let gy = c * (Complex64::i() * pow_m1 * w + pow_m * wy);
        let gz = c * pow_m * wz;
        if self.negative_m {
            let sign = if self.m_abs % 2 == 0 { 1.0 } else { -1.0 };
            (sign * s.conj(), [sign * gx.conj(), sign * gy.conj(), sign * gz.conj()])
        } else {
            (s, [gx, gy, gz])
        }
    }

    fn eval(&self, p: &[f64; 3]) -> EigenValue {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let n = self.n;
        let rho = 2.0 * r / n;
        let l0 = self.laguerre[0].eval(rho);
        let l1 = self.laguerre[1].eval(rho);
        let l2 = self.laguerre[2].eval(rho);
        let e = self.radial_norm * (-r / n).exp();
        let g = e * l0;
        let g1 = e * (-l0 / n + 2.0 * l1 / n);
        let g2 = e * (l0 - 4.0 * l1 + 4.0 * l2) / (n * n);
        let (s, grad_s) = self.solid_harmonic(p);
        let mut grad = [Complex64::default(); 3];
        for i in 0..3 {
            grad[i] = g1 * p[i] / r * s + g * grad_s[i];
        }
        // lap(g S) = S (g'' + 2 (l + 1) g' / r) for harmonic, degree-l S
        let laplacian = s * (g2 + 2.0 * (self.l as f64 + 1.0) * g1 / r);
        EigenValue {
            phi: g * s,
            grad,
            laplacian,
        }
    }
}

/// Finite superposition of hydrogen eigenstates (atomic units,
/// `E_n = -1/(2 n^2)`).
#[derive(Debug, Clone)]
pub struct HydrogenState {
    terms: Vec<HydrogenTerm>,
    eigen: Vec<Eigenstate>,
}

pub type HydrogenSuperposition = HydrogenState;

impl HydrogenState {
    pub fn new(terms: Vec<HydrogenTerm>) -> Result<Self, StateError> {
        if terms.is_empty() {
            return Err(StateError::Empty);
        }
        let mut seen = HashSet::new();
        for t in &terms {
            if t.n == 0 || t.l >= t.n || t.m.unsigned_abs() as usize > t.l {
                return Err(StateError::InvalidQuantumNumbers(format!(
                    "n = {}, l = {}, m = {}",
                    t.n, t.l, t.m
                )));
            }
            if !seen.insert((t.n, t.l, t.m)) {
                return Err(StateError::DuplicateLevel(format!("({}, {}, {})", t.n, t.l, t.m)));
            }
        }
        let norm: f64 = terms.iter().map(|t| t.coeff.norm_sqr()).sum();
        check_norm(norm)?;
        let eigen = terms.iter().map(|t| Eigenstate::new(t.n, t.l, t.m)).collect();
        Ok(Self { terms, eigen })
    }

    /// `[phi_100 + e^{i} phi_211 + e^{2i} phi_{32-1}] / sqrt(3)`.
    pub fn three_level_reference() -> Self {
        let r = 1.0 / 3f64.sqrt();
        Self::new(vec![
            HydrogenTerm {
                n: 1,
                l: 0,
                m: 0,
                coeff: Complex64::new(r, 0.0),
            },
            HydrogenTerm {
                n: 2,
                l: 1,
                m: 1,
                coeff: Complex64::from_polar(r, 1.0),
            },
            HydrogenTerm {
                n: 3,
                l: 2,
                m: -1,
                coeff: Complex64::from_polar(r, 2.0),
            },
        ])
        .expect("reference superposition is valid")
    }

    pub fn terms(&self) -> &[HydrogenTerm] {
        &self.terms
    }
}

impl WaveFunction<3> for HydrogenState {
    fn mass(&self) -> f64 {
        1.0
    }

    fn potential(&self) -> PotentialSpec {
        PotentialSpec::Coulomb
    }

    fn support_radius(&self) -> f64 {
        let n_max = self.terms.iter().map(|t| t.n).max().unwrap_or(1) as f64;
        4.0 * n_max * n_max + 12.0 * n_max
    }

    fn local(&self, q: &[f64; 3], t: f64) -> LocalWave<3> {
        let mut amplitude = Complex64::default();
        let mut gradient = [Complex64::default(); 3];
        let mut laplacian = Complex64::default();
        let mut time_derivative = Complex64::default();
        let mut incoherent = 0.0;
        for (term, eig) in self.terms.iter().zip(&self.eigen) {
            let c = term.coeff * Complex64::from_polar(1.0, -eig.energy * t);
            let v = eig.eval(q);
            let cphi = c * v.phi;
            amplitude += cphi;
            for i in 0..3 {
                gradient[i] += c * v.grad[i];
            }
            laplacian += c * v.laplacian;
            time_derivative += Complex64::new(0.0, -eig.energy) * cphi;
            incoherent += cphi.norm_sqr();
        }
        LocalWave {
            amplitude,
            gradient,
            laplacian,
            time_derivative,
            incoherent,
            log_scale: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::{gauss_legendre, spherical_harmonic};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn spherical(p: &[f64; 3]) -> (f64, f64, f64) {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        (r, (p[2] / r).acos(), p[1].atan2(p[0]))
    }

    #[test]
    fn solid_harmonic_matches_spherical_harmonic() {
        let points = [[0.3, -0.7, 0.5], [1.2, 0.4, -0.9], [-0.2, -0.1, 0.05]];
        for l in 0..=4usize {
            for m in -(l as i64)..=(l as i64) {
                let eig = Eigenstate::new(l + 1, l, m);
                for p in &points {
                    let (r, th, ph) = spherical(p);
                    let (s, _) = eig.solid_harmonic(p);
                    let y = spherical_harmonic(l, m, th, ph).unwrap() * r.powi(l as i32);
                    assert_relative_eq!(s.re, y.re, epsilon = 1e-13);
                    assert_relative_eq!(s.im, y.im, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn gradient_and_laplacian_match_finite_differences() {
        let h = 1e-4;
        let p = [0.4, -0.3, 0.8];
        for &(n, l, m) in &[(1, 0, 0), (2, 1, 1), (3, 2, -1), (3, 1, 0), (4, 3, 2)] {
            let eig = Eigenstate::new(n, l, m);
            let v = eig.eval(&p);
            let mut lap = -6.0 * v.phi;
            for i in 0..3 {
                let mut a = p;
                a[i] += h;
                let mut b = p;
                b[i] -= h;
                let (fa, fb) = (eig.eval(&a).phi, eig.eval(&b).phi);
                let d = (fa - fb) / (2.0 * h);
                assert!((d - v.grad[i]).norm() < 1e-7, "{n}{l}{m} axis {i}");
                lap += fa + fb;
            }
            lap /= h * h;
            assert!((lap - v.laplacian).norm() < 1e-4 * (1.0 + v.laplacian.norm()));
            // eigenvalue equation -lap/2 - phi/r = E phi
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let resid = -0.5 * v.laplacian - v.phi / r - eig.energy * v.phi;
            assert!(resid.norm() < 1e-12, "{n}{l}{m}: {resid}");
        }
    }

    #[test]
    fn eigenstates_are_normalized() {
        // radial Gauss-Laguerre-free quadrature: Gauss-Legendre on r in [0, 60]
        // split into panels, product with Gauss-Legendre in cos(theta), uniform phi
        let (gx, gw) = gauss_legendre(24);
        let (ux, uw) = gauss_legendre(12);
        let np = 12;
        for &(n, l, m) in &[(1, 0, 0), (2, 1, 1), (3, 2, -1), (3, 0, 0)] {
            let eig = Eigenstate::new(n, l, m);
            let mut total = 0.0;
            for panel in 0..30 {
                let (a, b) = (2.0 * panel as f64, 2.0 * panel as f64 + 2.0);
                for (x, w) in gx.iter().zip(&gw) {
                    let r = 0.5 * (b - a) * x + 0.5 * (a + b);
                    let wr = w * 0.5 * (b - a) * r * r;
                    for (u, wu) in ux.iter().zip(&uw) {
                        let s = (1.0 - u * u).sqrt();
                        for k in 0..np {
                            let ph = 2.0 * PI * k as f64 / np as f64;
                            let p = [r * s * ph.cos(), r * s * ph.sin(), r * u];
                            total += wr * wu * (2.0 * PI / np as f64) * eig.eval(&p).phi.norm_sqr();
                        }
                    }
                }
            }
            assert!((total - 1.0).abs() < 1e-8, "{n}{l}{m}: {total}");
        }
    }

    #[test]
    fn rejects_bad_quantum_numbers() {
        let t = |n, l, m| HydrogenTerm {
            n,
            l,
            m,
            coeff: Complex64::new(1.0, 0.0),
        };
        assert!(HydrogenState::new(vec![t(1, 1, 0)]).is_err());
        assert!(HydrogenState::new(vec![t(2, 1, 2)]).is_err());
        assert!(HydrogenState::new(vec![t(0, 0, 0)]).is_err());
        assert!(HydrogenState::new(vec![t(2, 1, -1)]).is_ok());
    }
}
