//! Closed-form wave functions and the local fields derived from them.
//!
//! Every state is a finite superposition of energy eigenstates evolved with
//! analytic phase factors. Implementations report values through
//! [`LocalWave`], which carries `psi` and its derivatives divided by a
//! positive gauge factor `exp(log_scale)`. All physical fields (velocity,
//! quantum potential, force) are ratios in which that factor cancels, so
//! Gaussian tails never underflow into spurious nodes.
//!
//! The phase `S` is never stored: velocities use `Im(grad psi / psi)` and
//! time derivatives `Im(d_t psi / psi)`.

mod hydrogen;
mod oscillator;

pub use hydrogen::{HydrogenState, HydrogenSuperposition, HydrogenTerm};
pub use oscillator::{OscillatorState, OscillatorSuperposition, OscillatorTerm};

use num_complex::Complex64;
use thiserror::Error;

/// Default node guard: a point is treated as a node when
/// `|psi|^2 <= DEFAULT_NODE_EPSILON * sum_k |term_k|^2` there.
pub const DEFAULT_NODE_EPSILON: f64 = 1e-12;

/// Base step of the central-difference force stencil (length units).
pub const DEFAULT_FORCE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("superposition has no terms")]
    Empty,
    #[error("norm of the superposition is {norm}, expected 1 within 1e-12")]
    NotNormalized { norm: f64 },
    #[error("duplicate eigenstate {0} in superposition")]
    DuplicateLevel(String),
    #[error("invalid quantum numbers: {0}")]
    InvalidQuantumNumbers(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    SpecialFunction(#[from] crate::special_functions::SpecialFunctionError),
}

/// The wave function is too close to a node for `Q` and its gradient to be
/// evaluated.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("node proximity at q = {position:?}, t = {time}: |psi|^2 / reference = {ratio:e}")]
pub struct NodeProximity {
    pub position: Vec<f64>,
    pub time: f64,
    pub ratio: f64,
}

/// Classical potential `V` acting on the particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    /// `V = stiffness * |q|^2 / 2`; the unit oscillator has stiffness 1.
    Oscillator { stiffness: f64 },
    /// `V = -1/r` (hydrogen, atomic units).
    Coulomb,
    /// `V = a k^2 |q|^2 / 2` for a decoupled field mode.
    FieldMode { a: f64, k: f64 },
}

impl PotentialSpec {
    pub fn unit_oscillator() -> Self {
        PotentialSpec::Oscillator { stiffness: 1.0 }
    }

    pub fn validate(&self) -> Result<(), StateError> {
        match *self {
            PotentialSpec::Oscillator { stiffness } if !stiffness.is_finite() => Err(
                StateError::InvalidParameter(format!("oscillator stiffness {stiffness}")),
            ),
            PotentialSpec::FieldMode { a, k } if !(a > 0.0 && k > 0.0 && a.is_finite() && k.is_finite()) => {
                Err(StateError::InvalidParameter(format!(
                    "field mode requires a > 0 and k > 0, got a = {a}, k = {k}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        let r2: f64 = q.iter().map(|x| x * x).sum();
        match *self {
            PotentialSpec::Oscillator { stiffness } => 0.5 * stiffness * r2,
            PotentialSpec::Coulomb => -1.0 / r2.sqrt(),
            PotentialSpec::FieldMode { a, k } => 0.5 * a * k * k * r2,
        }
    }

    pub fn gradient<const D: usize>(&self, q: &[f64; D]) -> [f64; D] {
        let mut g = [0.0; D];
        match *self {
            PotentialSpec::Oscillator { stiffness } => {
                for (gi, qi) in g.iter_mut().zip(q) {
                    *gi = stiffness * qi;
                }
            }
            PotentialSpec::Coulomb => {
                let r = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r3 = r * r * r;
                for (gi, qi) in g.iter_mut().zip(q) {
                    *gi = qi / r3;
                }
            }
            PotentialSpec::FieldMode { a, k } => {
                for (gi, qi) in g.iter_mut().zip(q) {
                    *gi = a * k * k * qi;
                }
            }
        }
        g
    }
}

/// `psi` and its derivatives at one space-time point, all divided by the
/// positive factor `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalWave<const D: usize> {
    pub amplitude: Complex64,
    pub gradient: [Complex64; D],
    pub laplacian: Complex64,
    pub time_derivative: Complex64,
    /// `sum_k |c_k(t) phi_k(q)|^2` in the same scaling as `amplitude`.
    pub incoherent: f64,
    pub log_scale: f64,
}

impl<const D: usize> LocalWave<D> {
    pub fn psi(&self) -> Complex64 {
        self.amplitude * self.log_scale.exp()
    }

    pub fn grad_psi(&self) -> [Complex64; D] {
        let s = self.log_scale.exp();
        self.gradient.map(|g| g * s)
    }

    pub fn density(&self) -> f64 {
        self.amplitude.norm_sqr() * (2.0 * self.log_scale).exp()
    }

    /// `|psi|^2` relative to the incoherent sum of the term densities.
    pub fn node_ratio(&self) -> f64 {
        let a = self.amplitude.norm_sqr();
        if self.incoherent > 0.0 {
            a / self.incoherent
        } else {
            0.0
        }
    }

    pub fn is_node(&self, epsilon: f64) -> bool {
        !(self.node_ratio() > epsilon) || !self.amplitude.norm_sqr().is_normal()
    }

    /// `grad S = Im(grad psi / psi)`.
    pub fn phase_gradient(&self) -> [f64; D] {
        let inv = 1.0 / self.amplitude;
        self.gradient.map(|g| (g * inv).im)
    }

    /// `dS/dt = Im(d_t psi / psi)`.
    pub fn phase_rate(&self) -> f64 {
        (self.time_derivative / self.amplitude).im
    }

    /// `Q = -(1/2m) lap|psi| / |psi| = -(1/2m) [Re(lap psi / psi) + |grad S|^2]`.
    pub fn quantum_potential(&self, mass: f64) -> f64 {
        let grad_s = self.phase_gradient();
        let lap = (self.laplacian / self.amplitude).re;
        let g2: f64 = grad_s.iter().map(|g| g * g).sum();
        -(lap + g2) / (2.0 * mass)
    }
}

/// A closed-form wave function on a `D`-dimensional configuration space.
pub trait WaveFunction<const D: usize>: Send + Sync {
    fn mass(&self) -> f64;

    /// Potential in which the state evolves under the Schrödinger equation.
    fn potential(&self) -> PotentialSpec;

    fn local(&self, q: &[f64; D], t: f64) -> LocalWave<D>;

    /// Half-width of a box that certainly contains the bulk of `|psi|^2`.
    fn support_radius(&self) -> f64;

    /// `-grad Q`. The default uses five-point central differences of `Q` at
    /// steps `h` and `2h` combined by one Richardson level.
    fn quantum_force(&self, q: &[f64; D], t: f64, epsilon: f64) -> Result<[f64; D], NodeProximity> {
        finite_difference_quantum_force(self, q, t, epsilon, DEFAULT_FORCE_STEP)
    }
}

pub(crate) fn node_error<const D: usize>(q: &[f64; D], t: f64, ratio: f64) -> NodeProximity {
    NodeProximity {
        position: q.to_vec(),
        time: t,
        ratio,
    }
}

/// `Q` at a point, refusing node neighborhoods.
pub fn quantum_potential<W, const D: usize>(
    state: &W,
    q: &[f64; D],
    t: f64,
    epsilon: f64,
) -> Result<f64, NodeProximity>
where
    W: WaveFunction<D> + ?Sized,
{
    let local = state.local(q, t);
    if local.is_node(epsilon) {
        return Err(node_error(q, t, local.node_ratio()));
    }
    Ok(local.quantum_potential(state.mass()))
}

pub fn finite_difference_quantum_force<W, const D: usize>(
    state: &W,
    q: &[f64; D],
    t: f64,
    epsilon: f64,
    step: f64,
) -> Result<[f64; D], NodeProximity>
where
    W: WaveFunction<D> + ?Sized,
{
    let qp = |x: &[f64; D]| quantum_potential(state, x, t, epsilon);
    let mut force = [0.0; D];
    for axis in 0..D {
        let at = |offset: f64| {
            let mut x = *q;
            x[axis] += offset;
            qp(&x)
        };
        let (m4, m2, m1) = (at(-4.0 * step)?, at(-2.0 * step)?, at(-step)?);
        let (p1, p2, p4) = (at(step)?, at(2.0 * step)?, at(4.0 * step)?);
        let fine = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * step);
        let coarse = (m4 - 8.0 * m2 + 8.0 * p2 - p4) / (24.0 * step);
        force[axis] = -(16.0 * fine - coarse) / 15.0;
    }
    Ok(force)
}

/// All local fields at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSample<const D: usize> {
    pub position: [f64; D],
    pub time: f64,
    pub psi: Complex64,
    pub grad_psi: [Complex64; D],
    pub density: f64,
    /// de Broglie velocity `grad S / m`.
    pub velocity: [f64; D],
    pub quantum_potential: f64,
    /// `-grad(V + Q)` with the state's own potential.
    pub bohm_force: [f64; D],
}

pub fn evaluate<W, const D: usize>(state: &W, q: &[f64; D], t: f64) -> Result<WaveSample<D>, NodeProximity>
where
    W: WaveFunction<D> + ?Sized,
{
    evaluate_with(state, q, t, DEFAULT_NODE_EPSILON)
}

pub fn evaluate_with<W, const D: usize>(
    state: &W,
    q: &[f64; D],
    t: f64,
    epsilon: f64,
) -> Result<WaveSample<D>, NodeProximity>
where
    W: WaveFunction<D> + ?Sized,
{
    let local = state.local(q, t);
    if local.is_node(epsilon) {
        return Err(node_error(q, t, local.node_ratio()));
    }
    let mass = state.mass();
    let grad_s = local.phase_gradient();
    let qf = state.quantum_force(q, t, epsilon)?;
    let dv = state.potential().gradient(q);
    let mut bohm_force = [0.0; D];
    for i in 0..D {
        bohm_force[i] = qf[i] - dv[i];
    }
    Ok(WaveSample {
        position: *q,
        time: t,
        psi: local.psi(),
        grad_psi: local.grad_psi(),
        density: local.density(),
        velocity: grad_s.map(|g| g / mass),
        quantum_potential: local.quantum_potential(mass),
        bohm_force,
    })
}

/// `grad S` at a point (the momentum that puts a particle on-shell).
pub fn de_broglie_momentum<W, const D: usize>(
    state: &W,
    q: &[f64; D],
    t: f64,
    epsilon: f64,
) -> Result<[f64; D], NodeProximity>
where
    W: WaveFunction<D> + ?Sized,
{
    let local = state.local(q, t);
    if local.is_node(epsilon) {
        return Err(node_error(q, t, local.node_ratio()));
    }
    Ok(local.phase_gradient())
}

pub fn quantum_force<W, const D: usize>(
    state: &W,
    q: &[f64; D],
    t: f64,
    epsilon: f64,
) -> Result<[f64; D], NodeProximity>
where
    W: WaveFunction<D> + ?Sized,
{
    state.quantum_force(q, t, epsilon)
}

/// `(-grad V + quantum_force) / mass`.
pub fn acceleration<W, const D: usize>(
    state: &W,
    potential: &PotentialSpec,
    q: &[f64; D],
    t: f64,
    mass: f64,
    epsilon: f64,
) -> Result<[f64; D], NodeProximity>
where
    W: WaveFunction<D> + ?Sized,
{
    let qf = state.quantum_force(q, t, epsilon)?;
    let dv = potential.gradient(q);
    let mut a = [0.0; D];
    for i in 0..D {
        a[i] = (qf[i] - dv[i]) / mass;
    }
    Ok(a)
}

fn check_norm(norm: f64) -> Result<(), StateError> {
    if (norm - 1.0).abs() > 1e-12 {
        return Err(StateError::NotNormalized { norm });
    }
    Ok(())
}
