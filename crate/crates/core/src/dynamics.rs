//! Trajectories under de Broglie's first-order law and Bohm's second-order law.

use thiserror::Error;

use crate::ode::{self, Control, Dopri5Settings, OdeSystem, Outcome};
use crate::quantum_state::{de_broglie_momentum, NodeProximity, PotentialSpec, WaveFunction, DEFAULT_NODE_EPSILON};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("initial point is at a node: {0}")]
    InitialNode(#[from] NodeProximity),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Law {
    DeBroglie,
    Bohm,
}

impl Law {
    pub fn name(&self) -> &'static str {
        match self {
            Law::DeBroglie => "de_broglie",
            Law::Bohm => "bohm",
        }
    }
}

impl std::str::FromStr for Law {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "de_broglie" | "debroglie" | "de-broglie" => Ok(Law::DeBroglie),
            "bohm" => Ok(Law::Bohm),
            other => Err(format!("unknown law '{other}' (expected de_broglie or bohm)")),
        }
    }
}

/// Position and momentum at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<const D: usize> {
    pub q: [f64; D],
    pub p: [f64; D],
    pub t: f64,
}

impl<const D: usize> PhasePoint<D> {
    pub fn new(q: [f64; D], p: [f64; D], t: f64) -> Self {
        Self { q, p, t }
    }

    pub fn radius(&self) -> f64 {
        self.q.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.q.iter().chain(&self.p).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    Escaped { radius: f64 },
    NodeAbort { t: f64 },
    StepFloor { t: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Escaped { .. } => "escaped",
            Termination::NodeAbort { .. } => "node_abort",
            Termination::StepFloor { .. } => "step_floor",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const D: usize> {
    pub samples: Vec<PhasePoint<D>>,
    pub law: Law,
    pub termination: Termination,
}

impl<const D: usize> Trajectory<D> {
    pub fn last(&self) -> &PhasePoint<D> {
        self.samples.last().expect("trajectory holds at least the initial point")
    }

    pub fn max_radius(&self) -> f64 {
        self.samples.iter().map(|s| s.radius()).fold(0.0, f64::max)
    }

    /// Largest position separation between samples taken at identical times.
    /// Returns `None` when the two sample grids differ.
    pub fn max_separation(&self, other: &Trajectory<D>) -> Option<f64> {
        if self.samples.len() != other.samples.len() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            if a.t != b.t {
                return None;
            }
            let d: f64 = a.q.iter().zip(&b.q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            worst = worst.max(d);
        }
        Some(worst)
    }
}

/// Qualitative fate of a trajectory relative to a reference radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryClass {
    Bound,
    FarExcursion,
    Escaped,
}

pub fn classify<const D: usize>(trajectory: &Trajectory<D>, bound_radius: f64) -> TrajectoryClass {
    match trajectory.termination {
        Termination::Escaped { .. } => TrajectoryClass::Escaped,
        _ if trajectory.max_radius() <= bound_radius => TrajectoryClass::Bound,
        _ => TrajectoryClass::FarExcursion,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub escape_radius: f64,
    /// Node guard as a fraction of the local incoherent term density.
    pub node_epsilon: f64,
    /// Record samples on this uniform time grid instead of every accepted step.
    pub sample_interval: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            max_step: 0.25,
            min_step: 1e-12,
            escape_radius: 20.0,
            node_epsilon: DEFAULT_NODE_EPSILON,
            sample_interval: None,
            max_steps: 200_000,
        }
    }
}

impl IntegratorConfig {
    /// Defaults for hydrogen runs (escape at 50 Bohr radii).
    pub fn hydrogen() -> Self {
        Self {
            escape_radius: 50.0,
            ..Self::default()
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self.abs_tol = tol;
        self
    }

    pub fn with_sampling(mut self, interval: f64) -> Self {
        self.sample_interval = Some(interval);
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: String| Err(DynamicsError::InvalidConfig(msg));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad(format!("tolerances must be positive ({}, {})", self.rel_tol, self.abs_tol));
        }
        if !(self.min_step > 0.0 && self.min_step < self.max_step && self.max_step.is_finite()) {
            return bad(format!(
                "require 0 < min_step < max_step, got {} and {}",
                self.min_step, self.max_step
            ));
        }
        if !(self.escape_radius > 0.0) {
            return bad(format!("escape radius must be positive, got {}", self.escape_radius));
        }
        if !(self.node_epsilon >= 0.0 && self.node_epsilon < 1.0) {
            return bad(format!("node epsilon must lie in [0, 1), got {}", self.node_epsilon));
        }
        if let Some(dt) = self.sample_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("sample interval must be positive, got {dt}"));
            }
        }
        Ok(())
    }

    fn settings(&self) -> Dopri5Settings {
        Dopri5Settings {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            h_max: self.max_step,
            h_min: self.min_step,
            max_steps: self.max_steps,
        }
    }

    fn checkpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let Some(dt) = self.sample_interval else {
            return Vec::new();
        };
        let span = (t1 - t0).abs();
        let dir = (t1 - t0).signum();
        let n = (span / dt + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (1..=n).map(|k| t0 + dir * k as f64 * dt).collect();
        if let Some(&last) = out.last() {
            if ((last - t1) * dir).abs() < 1e-9 * dt.max(1.0) {
                out.pop();
            }
        }
        out.push(t1);
        out
    }
}

/// Force law for the Newtonian (second-order) flow.
pub trait ForceField<const D: usize>: Sync {
    fn mass(&self) -> f64;

    fn force(&self, q: &[f64; D], t: f64, epsilon: f64) -> Result<[f64; D], NodeProximity>;
}

/// `-grad(V + Q)` for a wave function and an external potential.
pub struct BohmForce<'a, W: ?Sized> {
    pub state: &'a W,
    pub potential: PotentialSpec,
}

impl<W, const D: usize> ForceField<D> for BohmForce<'_, W>
where
    W: WaveFunction<D> + ?Sized,
{
    fn mass(&self) -> f64 {
        self.state.mass()
    }

    fn force(&self, q: &[f64; D], t: f64, epsilon: f64) -> Result<[f64; D], NodeProximity> {
        let qf = self.state.quantum_force(q, t, epsilon)?;
        let dv = self.potential.gradient(q);
        let mut f = [0.0; D];
        for i in 0..D {
            f[i] = qf[i] - dv[i];
        }
        Ok(f)
    }
}

/// Purely classical motion in `potential` (the quantum force switched off).
pub struct ClassicalForce {
    pub potential: PotentialSpec,
    pub mass: f64,
}

impl<const D: usize> ForceField<D> for ClassicalForce {
    fn mass(&self) -> f64 {
        self.mass
    }

    fn force(&self, q: &[f64; D], _t: f64, _epsilon: f64) -> Result<[f64; D], NodeProximity> {
        Ok(self.potential.gradient(q).map(|g| -g))
    }
}

struct GuidanceSystem<'a, W: ?Sized, const D: usize> {
    state: &'a W,
    epsilon: f64,
}

impl<W, const D: usize> OdeSystem for GuidanceSystem<'_, W, D>
where
    W: WaveFunction<D> + ?Sized,
{
    type Error = NodeProximity;

    fn dimension(&self) -> usize {
        D
    }

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<(), NodeProximity> {
        let q: [f64; D] = y.try_into().expect("dimension checked");
        let p = de_broglie_momentum(self.state, &q, t, self.epsilon)?;
        let m = self.state.mass();
        for i in 0..D {
            dydt[i] = p[i] / m;
        }
        Ok(())
    }
}

struct NewtonSystem<'a, F: ?Sized, const D: usize> {
    field: &'a F,
    epsilon: f64,
}

impl<F, const D: usize> OdeSystem for NewtonSystem<'_, F, D>
where
    F: ForceField<D> + ?Sized,
{
    type Error = NodeProximity;

    fn dimension(&self) -> usize {
        2 * D
    }

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<(), NodeProximity> {
        let q: [f64; D] = y[..D].try_into().expect("dimension checked");
        let f = self.field.force(&q, t, self.epsilon)?;
        let m = self.field.mass();
        for i in 0..D {
            dydt[i] = y[D + i] / m;
            dydt[D + i] = f[i];
        }
        Ok(())
    }
}

fn check_inputs<const D: usize>(q0: &[f64; D], p0: Option<&[f64; D]>, t0: f64, t1: f64) -> Result<(), DynamicsError> {
    let finite = q0.iter().chain(p0.into_iter().flatten()).all(|x| x.is_finite());
    if !finite || !t0.is_finite() || !t1.is_finite() {
        return Err(DynamicsError::InvalidInput("initial data and times must be finite".into()));
    }
    Ok(())
}

fn termination<E>(outcome: Outcome<E>, escaped: Option<f64>) -> Termination {
    match outcome {
        Outcome::Completed => Termination::Completed,
        Outcome::Stopped(_) => Termination::Escaped {
            radius: escaped.unwrap_or(f64::NAN),
        },
        Outcome::RhsFailure { t, .. } => Termination::NodeAbort { t },
        Outcome::StepFloor(t) | Outcome::MaxSteps(t) => Termination::StepFloor { t },
    }
}

/// Solves `dq/dt = grad S(q, t) / m` from `(q0, t0)` to `t1`.
pub fn integrate_de_broglie<W, const D: usize>(
    state: &W,
    q0: &[f64; D],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<D>, DynamicsError>
where
    W: WaveFunction<D> + ?Sized,
{
    cfg.validate()?;
    check_inputs(q0, None, t0, t1)?;
    let m = state.mass();
    let p0 = de_broglie_momentum(state, q0, t0, cfg.node_epsilon)?;
    let mut samples = vec![PhasePoint::new(*q0, p0, t0)];
    let system = GuidanceSystem::<W, D> {
        state,
        epsilon: cfg.node_epsilon,
    };
    let mut y = q0.to_vec();
    let checkpoints = cfg.checkpoints(t0, t1);
    let record_all = cfg.sample_interval.is_none();
    let mut escaped = None;
    let outcome = ode::integrate(&system, t0, &mut y, t1, &cfg.settings(), &checkpoints, |t, y, dydt, cp| {
        let q: [f64; D] = y.try_into().expect("dimension");
        let p: [f64; D] = std::array::from_fn(|i| m * dydt[i]);
        let point = PhasePoint::new(q, p, t);
        let r = point.radius();
        if record_all || cp || r > cfg.escape_radius {
            samples.push(point);
        }
        if r > cfg.escape_radius {
            escaped = Some(r);
            return Control::Stop;
        }
        Control::Continue
    });
    Ok(Trajectory {
        samples,
        law: Law::DeBroglie,
        termination: termination(outcome, escaped),
    })
}

/// Solves `dq/dt = p/m`, `dp/dt = F(q, t)` for an arbitrary force field.
pub fn integrate_newtonian<F, const D: usize>(
    field: &F,
    q0: &[f64; D],
    p0: &[f64; D],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<D>, DynamicsError>
where
    F: ForceField<D> + ?Sized,
{
    cfg.validate()?;
    check_inputs(q0, Some(p0), t0, t1)?;
    field.force(q0, t0, cfg.node_epsilon)?;
    let mut samples = vec![PhasePoint::new(*q0, *p0, t0)];
    let system = NewtonSystem::<F, D> {
        field,
        epsilon: cfg.node_epsilon,
    };
    let mut y: Vec<f64> = q0.iter().chain(p0.iter()).copied().collect();
    let checkpoints = cfg.checkpoints(t0, t1);
    let record_all = cfg.sample_interval.is_none();
    let mut escaped = None;
    let outcome = ode::integrate(&system, t0, &mut y, t1, &cfg.settings(), &checkpoints, |t, y, _, cp| {
        let q: [f64; D] = y[..D].try_into().expect("dimension");
        let p: [f64; D] = y[D..].try_into().expect("dimension");
        let point = PhasePoint::new(q, p, t);
        let r = point.radius();
        if record_all || cp || r > cfg.escape_radius {
            samples.push(point);
        }
        if r > cfg.escape_radius {
            escaped = Some(r);
            return Control::Stop;
        }
        Control::Continue
    });
    Ok(Trajectory {
        samples,
        law: Law::Bohm,
        termination: termination(outcome, escaped),
    })
}

/// Solves `m d^2q/dt^2 = -grad(V + Q)` with free initial momentum `p0`.
pub fn integrate_bohm<W, const D: usize>(
    state: &W,
    potential: &PotentialSpec,
    q0: &[f64; D],
    p0: &[f64; D],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<D>, DynamicsError>
where
    W: WaveFunction<D> + ?Sized,
{
    potential
        .validate()
        .map_err(|e| DynamicsError::InvalidInput(e.to_string()))?;
    let field = BohmForce {
        state,
        potential: *potential,
    };
    integrate_newtonian(&field, q0, p0, t0, t1, cfg)
}

/// Dispatches on the law; `p0` is ignored for de Broglie.
pub fn integrate<W, const D: usize>(
    law: Law,
    state: &W,
    potential: &PotentialSpec,
    q0: &[f64; D],
    p0: &[f64; D],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<D>, DynamicsError>
where
    W: WaveFunction<D> + ?Sized,
{
    match law {
        Law::DeBroglie => integrate_de_broglie(state, q0, t0, t1, cfg),
        Law::Bohm => integrate_bohm(state, potential, q0, p0, t0, t1, cfg),
    }
}

/// Speed above which motion under `a >= -b/x^2` from `x0 > 0` is unbounded:
/// `sqrt(2 b / x0)`.
pub fn escape_velocity(b: f64, x0: f64) -> Result<f64, DynamicsError> {
    if !(b > 0.0 && x0 > 0.0 && b.is_finite() && x0.is_finite()) {
        return Err(DynamicsError::InvalidInput(format!(
            "escape velocity needs b > 0 and x0 > 0, got b = {b}, x0 = {x0}"
        )));
    }
    Ok((2.0 * b / x0).sqrt())
}
