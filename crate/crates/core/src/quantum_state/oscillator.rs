use std::collections::HashSet;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_norm, node_error, LocalWave, NodeProximity, PotentialSpec, StateError, WaveFunction};
use crate::special_functions::{factorial, hermite, PolynomialCoeffs};

/// One product eigenstate `phi_{n_1}(q_1) ... phi_{n_D}(q_D)` with its
/// complex amplitude at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorTerm<const D: usize> {
    pub levels: [usize; D],
    pub coeff: Complex64,
}

impl OscillatorTerm<1> {
    pub fn polar(level: usize, modulus: f64, phase: f64) -> Self {
        Self {
            levels: [level],
            coeff: Complex64::from_polar(modulus, phase),
        }
    }
}

/// Superposition of isotropic harmonic-oscillator eigenstates with mass `m`
/// and angular frequency `omega` (hbar = 1). Each term evolves with the phase
/// `exp(-i omega (n_1 + ... + n_D + D/2) t)`.
#[derive(Debug, Clone)]
pub struct OscillatorState<const D: usize> {
    terms: Vec<OscillatorTerm<D>>,
    mass: f64,
    omega: f64,
    scale: f64,
    // basis[n][k] = D^k h_n with D p = p' - xi p, h_n the normalized
    // Hermite-function prefactor; the Gaussian lives in LocalWave::log_scale
    basis: Vec<[PolynomialCoeffs; 4]>,
}

/// One-dimensional oscillator superposition.
pub type OscillatorSuperposition = OscillatorState<1>;

impl<const D: usize> OscillatorState<D> {
    pub fn new(terms: Vec<OscillatorTerm<D>>, mass: f64, omega: f64) -> Result<Self, StateError> {
        if terms.is_empty() {
            return Err(StateError::Empty);
        }
        if !(mass > 0.0 && mass.is_finite() && omega > 0.0 && omega.is_finite()) {
            return Err(StateError::InvalidParameter(format!(
                "oscillator requires mass > 0 and omega > 0, got mass = {mass}, omega = {omega}"
            )));
        }
        let mut seen = HashSet::new();
        for term in &terms {
            if !seen.insert(term.levels) {
                return Err(StateError::DuplicateLevel(format!("{:?}", term.levels)));
            }
            if !(term.coeff.re.is_finite() && term.coeff.im.is_finite()) {
                return Err(StateError::InvalidParameter(format!(
                    "non-finite coefficient for {:?}",
                    term.levels
                )));
            }
        }
        let norm: f64 = terms.iter().map(|t| t.coeff.norm_sqr()).sum();
        check_norm(norm)?;
        let max_level = terms
            .iter()
            .flat_map(|t| t.levels.iter().copied())
            .max()
            .unwrap_or(0);
        let scale = (mass * omega).sqrt();
        let axis_norm = (mass * omega / PI).powf(0.25);
        let mut basis = Vec::with_capacity(max_level + 1);
        for n in 0..=max_level {
            let h0 = hermite(n)?.scale(axis_norm / (2f64.powi(n as i32) * factorial(n)).sqrt());
            let h1 = lower(&h0);
            let h2 = lower(&h1);
            let h3 = lower(&h2);
            basis.push([h0, h1, h2, h3]);
        }
        Ok(Self {
            terms,
            mass,
            omega,
            scale,
            basis,
        })
    }

    /// Like [`OscillatorState::new`] but rescales the coefficients to unit norm.
    pub fn normalized(mut terms: Vec<OscillatorTerm<D>>, mass: f64, omega: f64) -> Result<Self, StateError> {
        let norm: f64 = terms.iter().map(|t| t.coeff.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(StateError::Empty);
        }
        for t in &mut terms {
            t.coeff /= norm;
        }
        Self::new(terms, mass, omega)
    }

    /// Same coefficients, different oscillator.
    pub fn with_parameters(&self, mass: f64, omega: f64) -> Result<Self, StateError> {
        Self::new(self.terms.clone(), mass, omega)
    }

    pub fn terms(&self) -> &[OscillatorTerm<D>] {
        &self.terms
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `sqrt(m omega)`, the inverse oscillator length.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn max_level(&self) -> usize {
        self.basis.len() - 1
    }

    pub fn is_unit(&self) -> bool {
        self.mass == 1.0 && self.omega == 1.0
    }

    fn coefficient_at(&self, term: &OscillatorTerm<D>, t: f64) -> Complex64 {
        let quanta: usize = term.levels.iter().sum();
        let energy = self.omega * (quanta as f64 + 0.5 * D as f64);
        term.coeff * Complex64::from_polar(1.0, -energy * t)
    }

    fn energy(&self, term: &OscillatorTerm<D>) -> f64 {
        let quanta: usize = term.levels.iter().sum();
        self.omega * (quanta as f64 + 0.5 * D as f64)
    }

    // table[a][n][k] = (D^k h_n)(xi_a)
    fn table(&self, xi: &[f64; D]) -> Vec<Vec<[f64; 4]>> {
        xi.iter()
            .map(|&x| {
                self.basis
                    .iter()
                    .map(|polys| [polys[0].eval(x), polys[1].eval(x), polys[2].eval(x), polys[3].eval(x)])
                    .collect()
            })
            .collect()
    }

    /// `sum_k c_k(t) prod_a (D^{orders_a} h_{n_a})(xi_a)`.
    fn derivative(&self, table: &[Vec<[f64; 4]>], coeffs: &[Complex64], orders: [usize; D]) -> Complex64 {
        self.terms
            .iter()
            .zip(coeffs)
            .map(|(term, c)| {
                let prod: f64 = (0..D).map(|a| table[a][term.levels[a]][orders[a]]).product();
                c * prod
            })
            .sum()
    }

    fn scaled(&self, q: &[f64; D]) -> [f64; D] {
        q.map(|x| self.scale * x)
    }
}

impl OscillatorState<1> {
    /// Unit oscillator from `(level, modulus, phase)` triples.
    pub fn from_polar(terms: &[(usize, f64, f64)]) -> Result<Self, StateError> {
        let terms = terms
            .iter()
            .map(|&(n, r, theta)| OscillatorTerm::polar(n, r, theta))
            .collect();
        Self::new(terms, 1.0, 1.0)
    }

    /// `(phi_0 + e^{i theta_1} phi_1 + e^{i theta_2} phi_2) / sqrt(3)`.
    pub fn equal_three_level(theta1: f64, theta2: f64) -> Self {
        let r = 1.0 / 3f64.sqrt();
        Self::from_polar(&[(0, r, 0.0), (1, r, theta1), (2, r, theta2)])
            .expect("three-level superposition is valid")
    }

    pub fn ground() -> Self {
        Self::from_polar(&[(0, 1.0, 0.0)]).expect("ground state is valid")
    }

    /// Complex amplitude `c_m(0)` of level `m` (zero when absent).
    pub fn amplitude(&self, level: usize) -> Complex64 {
        self.terms
            .iter()
            .find(|t| t.levels[0] == level)
            .map(|t| t.coeff)
            .unwrap_or_default()
    }

    /// Highest level with a nonzero amplitude.
    pub fn top_level(&self) -> usize {
        self.terms
            .iter()
            .filter(|t| t.coeff.norm_sqr() > 0.0)
            .map(|t| t.levels[0])
            .max()
            .unwrap_or(0)
    }
}

impl OscillatorState<2> {
    /// Product state `psi_a(q_1) psi_b(q_2)` expanded into product terms.
    pub fn product(a: &OscillatorState<1>, b: &OscillatorState<1>) -> Result<Self, StateError> {
        if a.mass != b.mass || a.omega != b.omega {
            return Err(StateError::InvalidParameter(
                "product factors must share mass and frequency".into(),
            ));
        }
        let mut terms = Vec::with_capacity(a.terms.len() * b.terms.len());
        for ta in &a.terms {
            for tb in &b.terms {
                terms.push(OscillatorTerm {
                    levels: [ta.levels[0], tb.levels[0]],
                    coeff: ta.coeff * tb.coeff,
                });
            }
        }
        Self::normalized(terms, a.mass, a.omega)
    }
}

fn lower(p: &PolynomialCoeffs) -> PolynomialCoeffs {
    p.derivative().sub(&p.shift())
}

fn unit(axis: usize, k: usize, orders: &mut [usize]) {
    orders[axis] += k;
}

impl<const D: usize> WaveFunction<D> for OscillatorState<D> {
    fn mass(&self) -> f64 {
        self.mass
    }

    fn potential(&self) -> PotentialSpec {
        PotentialSpec::Oscillator {
            stiffness: self.mass * self.omega * self.omega,
        }
    }

    fn support_radius(&self) -> f64 {
        ((2 * self.max_level() + 1) as f64).sqrt() / self.scale + 7.0 / self.scale
    }

    fn local(&self, q: &[f64; D], t: f64) -> LocalWave<D> {
        let xi = self.scaled(q);
        let table = self.table(&xi);
        let coeffs: Vec<Complex64> = self.terms.iter().map(|term| self.coefficient_at(term, t)).collect();
        let amplitude = self.derivative(&table, &coeffs, [0; D]);
        let mut gradient = [Complex64::default(); D];
        let mut laplacian = Complex64::default();
        for axis in 0..D {
            let mut o1 = [0; D];
            unit(axis, 1, &mut o1);
            gradient[axis] = self.scale * self.derivative(&table, &coeffs, o1);
            let mut o2 = [0; D];
            unit(axis, 2, &mut o2);
            laplacian += self.scale * self.scale * self.derivative(&table, &coeffs, o2);
        }
        let mut time_derivative = Complex64::default();
        let mut incoherent = 0.0;
        for (term, c) in self.terms.iter().zip(&coeffs) {
            let prod: f64 = (0..D).map(|a| table[a][term.levels[a]][0]).product();
            time_derivative += Complex64::new(0.0, -self.energy(term)) * c * prod;
            incoherent += c.norm_sqr() * prod * prod;
        }
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        LocalWave {
            amplitude,
            gradient,
            laplacian,
            time_derivative,
            incoherent,
            log_scale: -0.5 * r2,
        }
    }

    /// Analytic `-grad Q` from third derivatives of `psi`; the Gaussian
    /// factor cancels from every ratio.
    fn quantum_force(&self, q: &[f64; D], t: f64, epsilon: f64) -> Result<[f64; D], NodeProximity> {
        let xi = self.scaled(q);
        let table = self.table(&xi);
        let coeffs: Vec<Complex64> = self.terms.iter().map(|term| self.coefficient_at(term, t)).collect();
        let amplitude = self.derivative(&table, &coeffs, [0; D]);
        let incoherent: f64 = self
            .terms
            .iter()
            .zip(&coeffs)
            .map(|(term, c)| {
                let prod: f64 = (0..D).map(|a| table[a][term.levels[a]][0]).product();
                c.norm_sqr() * prod * prod
            })
            .sum();
        let a2 = amplitude.norm_sqr();
        let ratio = if incoherent > 0.0 { a2 / incoherent } else { 0.0 };
        if !(ratio > epsilon) || !a2.is_normal() {
            return Err(node_error(q, t, ratio));
        }
        let inv = 1.0 / amplitude;
        let ratio_of = |orders: [usize; D]| self.derivative(&table, &coeffs, orders) * inv;

        let mut r1 = [Complex64::default(); D];
        let mut r2 = [[Complex64::default(); D]; D];
        let mut r3 = [[Complex64::default(); D]; D];
        for i in 0..D {
            let mut o = [0; D];
            unit(i, 1, &mut o);
            r1[i] = ratio_of(o);
            for j in 0..D {
                let mut o = [0; D];
                unit(i, 1, &mut o);
                unit(j, 1, &mut o);
                r2[i][j] = ratio_of(o);
                let mut o = [0; D];
                unit(i, 2, &mut o);
                unit(j, 1, &mut o);
                r3[i][j] = ratio_of(o);
            }
        }
        let prefactor = self.scale.powi(3) / (2.0 * self.mass);
        let mut force = [0.0; D];
        for (j, f) in force.iter_mut().enumerate() {
            let mut bracket = 0.0;
            for i in 0..D {
                bracket += (r3[i][j] - r2[i][i] * r1[j]).re;
                bracket += 2.0 * r1[i].im * (r2[i][j] - r1[i] * r1[j]).im;
            }
            *f = prefactor * bracket;
        }
        Ok(force)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_state::{
        acceleration, de_broglie_momentum, evaluate, finite_difference_quantum_force, DEFAULT_NODE_EPSILON,
    };
    use approx::assert_relative_eq;

    // phi_m from the textbook formula, evaluated directly
    fn phi(m: usize, x: f64) -> f64 {
        let h = hermite(m).unwrap().eval(x);
        PI.powf(-0.25) / (2f64.powi(m as i32) * factorial(m)).sqrt() * h * (-x * x / 2.0).exp()
    }

    #[test]
    fn psi_at_origin_matches_closed_form() {
        let (t1, t2) = (0.4, 2.3);
        let state = OscillatorSuperposition::equal_three_level(t1, t2);
        let psi = state.local(&[0.0], 0.0).psi();
        let expected = (1.0 / 3f64.sqrt())
            * PI.powf(-0.25)
            * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, t2) / 2f64.sqrt());
        assert_relative_eq!(psi.re, expected.re, epsilon = 1e-15);
        assert_relative_eq!(psi.im, expected.im, epsilon = 1e-15);
        assert_relative_eq!(phi(2, 0.0), -PI.powf(-0.25) / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn psi_matches_term_by_term_sum() {
        let state = OscillatorSuperposition::equal_three_level(1.1, 1.8);
        for &(x, t) in &[(0.3, 0.0), (-1.2, 0.7), (2.5, 4.0)] {
            let expected: Complex64 = (0..3)
                .map(|m| {
                    let theta = [0.0, 1.1, 1.8][m];
                    Complex64::from_polar(1.0 / 3f64.sqrt(), theta - (m as f64 + 0.5) * t) * phi(m, x)
                })
                .sum();
            let psi = state.local(&[x], t).psi();
            assert_relative_eq!(psi.re, expected.re, epsilon = 1e-14);
            assert_relative_eq!(psi.im, expected.im, epsilon = 1e-14);
        }
    }

    #[test]
    fn ground_state_statics() {
        let g = OscillatorSuperposition::ground();
        for &x in &[-4.0, -1.3, 0.0, 0.2, 3.7] {
            for &t in &[0.0, 1.0, 17.0] {
                let s = evaluate(&g, &[x], t).unwrap();
                assert!(s.velocity[0].abs() < 1e-14);
                assert_relative_eq!(s.quantum_potential, 0.5 - x * x / 2.0, epsilon = 1e-12);
                assert!(s.bohm_force[0].abs() < 1e-12);
                let a = acceleration(&g, &g.potential(), &[x], t, 1.0, DEFAULT_NODE_EPSILON).unwrap();
                assert!(a[0].abs() < 1e-12);
                assert!(de_broglie_momentum(&g, &[x], t, DEFAULT_NODE_EPSILON).unwrap()[0].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn far_tail_is_not_a_node() {
        let state = OscillatorSuperposition::equal_three_level(1.1, 1.8);
        let local = state.local(&[40.0], 1.0);
        assert_eq!(local.density(), 0.0);
        assert!(!local.is_node(DEFAULT_NODE_EPSILON));
        assert!(state.quantum_force(&[40.0], 1.0, DEFAULT_NODE_EPSILON).is_ok());
    }

    #[test]
    fn pure_node_is_rejected() {
        let first = OscillatorSuperposition::from_polar(&[(1, 1.0, 0.0)]).unwrap();
        assert!(evaluate(&first, &[0.0], 0.3).is_err());
    }

    #[test]
    fn analytic_force_matches_finite_differences() {
        let state = OscillatorSuperposition::equal_three_level(1.1, 1.8);
        for &(x, t) in &[(0.5, 0.2), (-1.5, 2.0), (2.2, 5.5), (3.5, 1.0)] {
            let a = state.quantum_force(&[x], t, DEFAULT_NODE_EPSILON).unwrap()[0];
            let f = finite_difference_quantum_force(&state, &[x], t, DEFAULT_NODE_EPSILON, 1e-3).unwrap()[0];
            assert_relative_eq!(a, f, max_relative = 1e-7);
        }
    }

    #[test]
    fn scaled_oscillator_is_an_eigenbasis() {
        // -1/(2m) psi'' + m w^2 x^2 / 2 psi = E psi for a single level
        let st = OscillatorState::<1>::new(vec![OscillatorTerm::polar(3, 1.0, 0.0)], 8.0, 1.5).unwrap();
        for &x in &[-0.4, 0.1, 0.7] {
            let l = st.local(&[x], 0.0);
            let lhs = -l.laplacian / (2.0 * 8.0) + 0.5 * 8.0 * 2.25 * x * x * l.amplitude;
            let rhs = 1.5 * 3.5 * l.amplitude;
            assert_relative_eq!(lhs.re, rhs.re, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn product_state_norm_and_separability() {
        let a = OscillatorSuperposition::equal_three_level(1.1, 1.8);
        let b = OscillatorSuperposition::equal_three_level(2.0, 4.0);
        let ab = OscillatorState::<2>::product(&a, &b).unwrap();
        assert_eq!(ab.terms().len(), 9);
        let q = [0.7, -0.4];
        let t = 1.3;
        let pa = a.local(&[q[0]], t).psi();
        let pb = b.local(&[q[1]], t).psi();
        let pab = ab.local(&q, t).psi();
        assert_relative_eq!((pa * pb - pab).norm(), 0.0, epsilon = 1e-14);
        let fa = a.quantum_force(&[q[0]], t, 1e-12).unwrap()[0];
        let fb = b.quantum_force(&[q[1]], t, 1e-12).unwrap()[0];
        let fab = ab.quantum_force(&q, t, 1e-12).unwrap();
        assert_relative_eq!(fab[0], fa, max_relative = 1e-10);
        assert_relative_eq!(fab[1], fb, max_relative = 1e-10);
    }

    #[test]
    fn rejects_invalid_states() {
        assert!(matches!(
            OscillatorSuperposition::from_polar(&[(0, 0.5, 0.0)]),
            Err(StateError::NotNormalized { .. })
        ));
        let r = 1.0 / 2f64.sqrt();
        assert!(matches!(
            OscillatorSuperposition::from_polar(&[(1, r, 0.0), (1, r, 0.3)]),
            Err(StateError::DuplicateLevel(_))
        ));
        assert!(OscillatorSuperposition::from_polar(&[(13, 1.0, 0.0)]).is_err());
        assert!(OscillatorState::<1>::new(vec![OscillatorTerm::polar(0, 1.0, 0.0)], -1.0, 1.0).is_err());
    }
}
