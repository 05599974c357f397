//! A decoupled scalar-field mode on expanding flat space, in the
//! short-wavelength limit where the scale factor `a` is frozen.
//!
//! The two real amplitudes `(q_k1, q_k2)` of mode `k` move like a 2-D
//! particle with mass `a^3` in the potential `a k^2 |q|^2 / 2`, so the mode is
//! an isotropic oscillator of frequency `k / a`. The Hubble time `1/H = a / a'`
//! must be long compared with the mode period `2 pi a / k`; callers assert
//! this, it is not checked.

use thiserror::Error;

use crate::dynamics::{IntegratorConfig, Law, PhasePoint};
use crate::ensemble::{self, EnsembleDiagnostics, EnsembleError};
use crate::quantum_state::{de_broglie_momentum, OscillatorState, OscillatorSuperposition, PotentialSpec, StateError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldModeError {
    #[error("field mode requires a > 0 and k > 0, got a = {a}, k = {k}")]
    InvalidMode { a: f64, k: f64 },
    #[error("state does not match the mapped oscillator (mass {mass}, omega {omega})")]
    StateMismatch { mass: f64, omega: f64 },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldModeSpec {
    pub k: f64,
    pub a: f64,
}

impl FieldModeSpec {
    pub fn new(a: f64, k: f64) -> Result<Self, FieldModeError> {
        if !(a > 0.0 && k > 0.0 && a.is_finite() && k.is_finite()) {
            return Err(FieldModeError::InvalidMode { a, k });
        }
        Ok(Self { k, a })
    }

    pub fn effective_mass(&self) -> f64 {
        self.a * self.a * self.a
    }

    pub fn omega(&self) -> f64 {
        self.k / self.a
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega()
    }

    /// `sqrt(m omega) = a k^{1/2}`, the inverse oscillator length of the mode.
    pub fn scale(&self) -> f64 {
        (self.effective_mass() * self.omega()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedOscillator {
    pub mass: f64,
    pub omega: f64,
    pub potential: PotentialSpec,
}

pub fn mode_to_oscillator(spec: &FieldModeSpec) -> Result<MappedOscillator, FieldModeError> {
    let spec = FieldModeSpec::new(spec.a, spec.k)?;
    Ok(MappedOscillator {
        mass: spec.effective_mass(),
        omega: spec.omega(),
        potential: PotentialSpec::FieldMode { a: spec.a, k: spec.k },
    })
}

/// Product state `psi_1(q_k1) psi_2(q_k2)` of two unit-oscillator factors,
/// carried over to the mapped mass and frequency.
pub fn mode_state(
    spec: &FieldModeSpec,
    first: &OscillatorSuperposition,
    second: &OscillatorSuperposition,
) -> Result<OscillatorState<2>, FieldModeError> {
    let m = mode_to_oscillator(spec)?;
    Ok(OscillatorState::<2>::product(first, second)?.with_parameters(m.mass, m.omega)?)
}

/// Default mode state: the escape-prone three-level superposition along
/// `q_k1` and the relaxation example along `q_k2`.
pub fn default_mode_state(spec: &FieldModeSpec) -> Result<OscillatorState<2>, FieldModeError> {
    mode_state(
        spec,
        &OscillatorSuperposition::equal_three_level(1.1, 1.8),
        &OscillatorSuperposition::equal_three_level(2.0, 4.0),
    )
}

/// Escape speed for the mapped mode when the unit-oscillator acceleration of
/// the first factor obeys `a >= -b / xi^2`: the bound becomes
/// `-(b omega^2 / s^3) / x^2` with `s = sqrt(m omega)`.
pub fn mapped_escape_velocity(spec: &FieldModeSpec, b: f64, x0: f64) -> Result<f64, FieldModeError> {
    let spec = FieldModeSpec::new(spec.a, spec.k)?;
    let s = spec.scale();
    let b_eff = b * spec.omega().powi(2) / s.powi(3);
    crate::dynamics::escape_velocity(b_eff, x0).map_err(|_| FieldModeError::InvalidMode { a: spec.a, k: spec.k })
}

/// How blob momenta are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlobMomenta {
    /// Every point gets `p = grad S(q, 0)` (the first-order initial condition).
    OnShell,
    /// Gaussian about `grad S(center) + offset` with width `sigma_p`.
    Offset { offset: [f64; 2], sigma_p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBlob {
    pub center: [f64; 2],
    pub sigma_q: f64,
    pub momenta: BlobMomenta,
    pub n: usize,
    pub seed: u64,
}

/// Samples the blob, evolves it under Bohm's law in the mapped potential and
/// returns diagnostics at `checkpoints + 1` evenly spaced times.
pub fn mode_instability_run(
    spec: &FieldModeSpec,
    state: &OscillatorState<2>,
    blob: &ModeBlob,
    t1: f64,
    checkpoints: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<EnsembleDiagnostics>, FieldModeError> {
    let mapped = mode_to_oscillator(spec)?;
    check_state(state, &mapped)?;
    let eps = cfg.node_epsilon;
    let base_p = de_broglie_momentum(state, &blob.center, 0.0, eps).map_err(|e| EnsembleError::Dynamics(e.into()))?;
    let ensemble = match blob.momenta {
        BlobMomenta::OnShell => {
            let mut e = ensemble::sample_blob(&PhasePoint::new(blob.center, base_p, 0.0), blob.sigma_q, 0.0, blob.n, blob.seed)?;
            for pt in &mut e.points {
                pt.p = de_broglie_momentum(state, &pt.q, 0.0, eps).map_err(|e| EnsembleError::Dynamics(e.into()))?;
            }
            e
        }
        BlobMomenta::Offset { offset, sigma_p } => {
            let p = [base_p[0] + offset[0], base_p[1] + offset[1]];
            ensemble::sample_blob(&PhasePoint::new(blob.center, p, 0.0), blob.sigma_q, sigma_p, blob.n, blob.seed)?
        }
    };
    let series = ensemble::evolve_series(&ensemble, state, &mapped.potential, Law::Bohm, t1, checkpoints, cfg)?;
    Ok(ensemble::diagnostics_series(&series, state, eps))
}

fn check_state(state: &OscillatorState<2>, mapped: &MappedOscillator) -> Result<(), FieldModeError> {
    use crate::quantum_state::WaveFunction;
    if state.mass() != mapped.mass || state.omega() != mapped.omega {
        return Err(FieldModeError::StateMismatch {
            mass: mapped.mass,
            omega: mapped.omega,
        });
    }
    Ok(())
}

/// Integrator settings for a mode: escape radius `20` oscillator lengths.
pub fn mode_integrator_config(spec: &FieldModeSpec, base: &IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig {
        escape_radius: 20.0 / spec.scale(),
        ..*base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_bohm, integrate_de_broglie};
    use crate::quantum_state::WaveFunction;

    #[test]
    fn mapping_examples() {
        let m = mode_to_oscillator(&FieldModeSpec::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!((m.mass, m.omega), (1.0, 1.0));
        let m = mode_to_oscillator(&FieldModeSpec::new(2.0, 3.0).unwrap()).unwrap();
        assert_eq!((m.mass, m.omega), (8.0, 1.5));
        // a k^2 / 2 = m omega^2 / 2
        assert_eq!(m.potential.value(&[1.0, 0.0]), 0.5 * 8.0 * 1.5 * 1.5);
        assert!(FieldModeSpec::new(0.0, 1.0).is_err());
        assert!(FieldModeSpec::new(1.0, -2.0).is_err());
    }

    #[test]
    fn ground_mode_feels_no_force() {
        let spec = FieldModeSpec::new(1.0, 1.0).unwrap();
        let g = OscillatorSuperposition::ground();
        let st = mode_state(&spec, &g, &g).unwrap();
        let pot = mode_to_oscillator(&spec).unwrap().potential;
        for q in [[0.3, -0.2], [1.5, 0.9], [-2.0, 2.0]] {
            let f = crate::quantum_state::acceleration(&st, &pot, &q, 0.7, 1.0, 1e-12).unwrap();
            assert!(f[0].abs() < 1e-12 && f[1].abs() < 1e-12, "{f:?}");
        }
    }

    #[test]
    fn mapped_trajectory_rescales_to_unit_oscillator() {
        let unit = default_mode_state(&FieldModeSpec::new(1.0, 1.0).unwrap()).unwrap();
        let cfg = IntegratorConfig::default().with_tolerance(1e-11);
        // slightly off-shell start, so that Bohm's law and not the guidance law is tested
        let xi0 = [0.4, -0.3];
        let on = de_broglie_momentum(&unit, &xi0, 0.0, 1e-12).unwrap();
        let pu0 = [on[0] + 0.05, on[1] - 0.05];
        let reference = integrate_bohm(&unit, &unit.potential(), &xi0, &pu0, 0.0, 4.0, &cfg).unwrap();
        let end = reference.last();
        for (a, k) in [(2.0, 3.0), (0.5, 2.0)] {
            let spec = FieldModeSpec::new(a, k).unwrap();
            let st = default_mode_state(&spec).unwrap();
            let pot = mode_to_oscillator(&spec).unwrap().potential;
            let (s, w) = (spec.scale(), spec.omega());
            let q0 = xi0.map(|x| x / s);
            let p0 = pu0.map(|p| p * s);
            let tr = integrate_bohm(&st, &pot, &q0, &p0, 0.0, 4.0 / w, &cfg).unwrap();
            let last = tr.last();
            for i in 0..2 {
                assert!((last.q[i] * s - end.q[i]).abs() < 1e-8, "{a} {k}");
                assert!((last.p[i] / s - end.p[i]).abs() < 1e-8, "{a} {k}");
            }
        }
    }

    #[test]
    fn on_shell_mode_follows_first_order_flow() {
        let spec = FieldModeSpec::new(2.0, 3.0).unwrap();
        let st = default_mode_state(&spec).unwrap();
        let pot = mode_to_oscillator(&spec).unwrap().potential;
        let cfg = IntegratorConfig::default().with_tolerance(1e-11).with_sampling(0.25);
        let q0 = [0.1, 0.15];
        let p0 = de_broglie_momentum(&st, &q0, 0.0, 1e-12).unwrap();
        let b = integrate_bohm(&st, &pot, &q0, &p0, 0.0, spec.period(), &cfg).unwrap();
        let d = integrate_de_broglie(&st, &q0, 0.0, spec.period(), &cfg).unwrap();
        assert!(b.max_separation(&d).unwrap() < 1e-8);
    }

    #[test]
    fn unit_mode_matches_particle_oscillator_bitwise() {
        let spec = FieldModeSpec::new(1.0, 1.0).unwrap();
        let st = default_mode_state(&spec).unwrap();
        let blob = ModeBlob {
            center: [0.4, 0.2],
            sigma_q: 0.05,
            momenta: BlobMomenta::Offset {
                offset: [0.3, 0.0],
                sigma_p: 0.05,
            },
            n: 64,
            seed: 9,
        };
        let cfg = IntegratorConfig::default();
        let mode = mode_instability_run(&spec, &st, &blob, 2.0, 4, &cfg).unwrap();

        let particle = OscillatorState::<2>::product(
            &OscillatorSuperposition::equal_three_level(1.1, 1.8),
            &OscillatorSuperposition::equal_three_level(2.0, 4.0),
        )
        .unwrap();
        let p = de_broglie_momentum(&particle, &blob.center, 0.0, 1e-12).unwrap();
        let e = ensemble::sample_blob(&PhasePoint::new(blob.center, [p[0] + 0.3, p[1]], 0.0), 0.05, 0.05, 64, 9).unwrap();
        let series = ensemble::evolve_series(&e, &particle, &particle.potential(), Law::Bohm, 2.0, 4, &cfg).unwrap();
        let direct = ensemble::diagnostics_series(&series, &particle, 1e-12);
        assert_eq!(mode, direct);
    }
}
