//! The thirteen reproduction checks, each runnable on its own.
//!
//! Every check returns a [`CriterionReport`] with the measured quantities it
//! based its verdict on, so callers can re-judge them independently.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::asymptotics::{self, BoundGrid};
use crate::dynamics::{self, integrate_bohm, integrate_de_broglie, ClassicalForce, IntegratorConfig, Law, PhasePoint, Termination};
use crate::ensemble::{self, ks_critical_value};
use crate::field_mode::{self, BlobMomenta, FieldModeSpec, ModeBlob};
use crate::quantum_state::{
    acceleration, de_broglie_momentum, HydrogenState, OscillatorSuperposition, PotentialSpec, WaveFunction,
    DEFAULT_NODE_EPSILON,
};

pub const CRITERION_COUNT: u8 = 13;
pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriterionError {
    #[error("no criterion numbered {0} (valid: 1-13)")]
    Unknown(u8),
    #[error("criterion {number} aborted: {message}")]
    Aborted { number: u8, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub number: u8,
    pub title: &'static str,
    pub passed: bool,
    pub metrics: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl CriterionReport {
    fn new(number: u8) -> Self {
        Self {
            number,
            title: title(number),
            passed: false,
            metrics: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push((name.into(), value));
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// `"[PASS] 7 Born rule preserved under de Broglie flow"`.
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.number,
            self.title
        )
    }
}

pub fn title(number: u8) -> &'static str {
    match number {
        1 => "bound a + 2/x^2 > 0 on the (3,10) x (0,2pi) grid",
        2 => "bound a + 2/x^2 > 0 out to x = 1000",
        3 => "asymptotic law a x^2 + b cos(t + dtheta) -> 0",
        4 => "rational acceleration equals direct acceleration",
        5 => "hydrogen: on-shell Bohm equals de Broglie",
        6 => "hydrogen: reference de Broglie momentum",
        7 => "Born rule preserved under de Broglie flow",
        8 => "on-shell blob relaxes, p-shifted blob departs",
        9 => "ground state: static force, drifting off-shell blob",
        10 => "escape above the escape velocity",
        11 => "phase-space volume conserved",
        12 => "field mode: identity mapping and instability",
        13 => "leading numerator coefficient cancels exactly",
        _ => "unknown",
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriteriaSettings {
    pub seed: u64,
}

impl Default for CriteriaSettings {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED }
    }
}

pub fn run(number: u8, settings: &CriteriaSettings) -> Result<CriterionReport, CriterionError> {
    let abort = |message: String| CriterionError::Aborted { number, message };
    match number {
        1 => fig1_bound().map_err(abort),
        2 => far_bound().map_err(abort),
        3 => asymptotic_law(settings).map_err(abort),
        4 => oracle_equivalence(settings).map_err(abort),
        5 => hydrogen_law_agreement().map_err(abort),
        6 => hydrogen_reference_momentum().map_err(abort),
        7 => born_rule(settings).map_err(abort),
        8 => instability_witness(settings).map_err(abort),
        9 => ground_state_statics(settings).map_err(abort),
        10 => escape().map_err(abort),
        11 => liouville().map_err(abort),
        12 => field_mode_consistency(settings).map_err(abort),
        13 => cancellation(settings).map_err(abort),
        n => Err(CriterionError::Unknown(n)),
    }
}

pub fn run_all(settings: &CriteriaSettings) -> Vec<Result<CriterionReport, CriterionError>> {
    (1..=CRITERION_COUNT).map(|n| run(n, settings)).collect()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// State of the bound and escape checks.
pub fn bound_state() -> OscillatorSuperposition {
    OscillatorSuperposition::equal_three_level(1.1, 1.8)
}

/// State of the relaxation / instability figures.
pub fn relaxation_state() -> OscillatorSuperposition {
    OscillatorSuperposition::equal_three_level(2.0, 4.0)
}

pub fn fig1_grid() -> BoundGrid {
    BoundGrid::open_uniform(3.0, 10.0, 400, 200)
}

pub fn far_grid() -> BoundGrid {
    BoundGrid::log_spaced(10.0, 1e3, 50, 32)
}

fn fig1_bound() -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(1);
    let rep = asymptotics::verify_bound(&bound_state(), &fig1_grid(), 2.0).map_err(err)?;
    r.metric("min_margin", rep.min_margin);
    r.metric("evaluated", rep.evaluated as f64);
    r.metric("excluded", rep.excluded.len() as f64);
    r.notes.push(format!("minimum at x = {:.4}, t = {:.4}", rep.argmin.0, rep.argmin.1));
    r.passed = rep.evaluated >= 400 * 200 && rep.min_margin > 0.0;
    Ok(r)
}

fn far_bound() -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(2);
    let rep = asymptotics::verify_bound(&bound_state(), &far_grid(), 2.0).map_err(err)?;
    r.metric("min_margin", rep.min_margin);
    r.metric("min_scaled", rep.min_scaled);
    r.metric("evaluated", rep.evaluated as f64);
    r.passed = rep.evaluated >= 50 * 32 && rep.min_margin > 0.0;
    Ok(r)
}

/// Sixteen times evenly spread over one period.
pub fn sixteen_times() -> Vec<f64> {
    (0..16).map(|j| TAU * j as f64 / 16.0).collect()
}

fn asymptotic_law(settings: &CriteriaSettings) -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(3);
    let times = sixteen_times();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_decay = f64::INFINITY;
    let mut worst_corrected: f64 = 0.0;
    let mut worst_corrected_decay = f64::INFINITY;
    for i in 0..20 {
        let st = asymptotics::random_superposition(settings.seed, i, 6).map_err(err)?;
        let bound = asymptotics::asymptotic_bound(&st).map_err(err)?;
        let literal = |x: f64| -> Result<f64, String> {
            let mut worst: f64 = 0.0;
            for &t in &times {
                let poly = asymptotics::density_polynomial(&st, t).map_err(err)?;
                let a = asymptotics::rational_acceleration(&poly, x).map_err(err)?;
                worst = worst.max((a * x * x + bound.b * (t + bound.phase_offset).cos()).abs());
            }
            Ok(worst)
        };
        let (l2, l3) = (literal(1e2)?, literal(1e3)?);
        worst_ratio = worst_ratio.max(l3 / bound.b);
        worst_decay = worst_decay.min(l2 / l3);
        let c2 = asymptotics::asymptotic_residual(&st, 1e2, &times).map_err(err)?;
        let c3 = asymptotics::asymptotic_residual(&st, 1e3, &times).map_err(err)?;
        worst_corrected = worst_corrected.max(c3 / bound.b);
        worst_corrected_decay = worst_corrected_decay.min(c2 / c3);
    }
    r.metric("max_residual_over_b", worst_ratio);
    r.metric("min_decay_factor", worst_decay);
    r.metric("corrected_max_residual_over_b", worst_corrected);
    r.metric("corrected_min_decay_factor", worst_corrected_decay);
    r.notes.push(format!(
        "with cos(t - dtheta) instead: max residual/b = {worst_corrected:.3e}, min decay factor = {worst_corrected_decay:.2}"
    ));
    r.passed = worst_ratio < 0.01 && worst_decay >= 5.0;
    Ok(r)
}

fn oracle_equivalence(settings: &CriteriaSettings) -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(4);
    let st = bound_state();
    let pot = PotentialSpec::unit_oscillator();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(4);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    while used < 1000 {
        let x: f64 = rng.random_range(-6.0..6.0);
        let t: f64 = rng.random_range(0.0..TAU);
        if st.local(&[x], t).node_ratio() <= 10.0 * DEFAULT_NODE_EPSILON {
            continue;
        }
        let poly = asymptotics::density_polynomial(&st, t).map_err(err)?;
        let a_rational = asymptotics::rational_acceleration(&poly, x).map_err(err)?;
        let a_direct = acceleration(&st, &pot, &[x], t, 1.0, DEFAULT_NODE_EPSILON).map_err(err)?[0];
        worst = worst.max((a_rational - a_direct).abs() / a_direct.abs());
        used += 1;
    }
    r.metric("max_relative_error", worst);
    r.passed = worst < 1e-6;
    Ok(r)
}

pub const HYDROGEN_START: [f64; 3] = [0.5, 0.5, 0.5];

fn hydrogen_law_agreement() -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(5);
    let st = HydrogenState::three_level_reference();
    let cfg = IntegratorConfig::hydrogen().with_tolerance(1e-9).with_sampling(0.05);
    let p0 = de_broglie_momentum(&st, &HYDROGEN_START, 0.0, cfg.node_epsilon).map_err(err)?;
    let b = integrate_bohm(&st, &st.potential(), &HYDROGEN_START, &p0, 0.0, 10.0, &cfg).map_err(err)?;
    let d = integrate_de_broglie(&st, &HYDROGEN_START, 0.0, 10.0, &cfg).map_err(err)?;
    let sep = b.max_separation(&d).unwrap_or(f64::INFINITY);
    r.metric("sup_separation", sep);
    r.notes.push(format!("terminations: bohm {}, de Broglie {}", b.termination.label(), d.termination.label()));
    r.passed = b.termination == Termination::Completed && d.termination == Termination::Completed && sep < 1e-5;
    Ok(r)
}

pub const HYDROGEN_REFERENCE_MOMENTUM: [f64; 3] = [-0.19, -0.11, -0.02];

fn hydrogen_reference_momentum() -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(6);
    let st = HydrogenState::three_level_reference();
    let p = de_broglie_momentum(&st, &HYDROGEN_START, 0.0, DEFAULT_NODE_EPSILON).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (i, axis) in ["px", "py", "pz"].iter().enumerate() {
        r.metric(*axis, p[i]);
        worst = worst.max((p[i] - HYDROGEN_REFERENCE_MOMENTUM[i]).abs());
    }
    r.metric("max_abs_deviation", worst);
    r.passed = worst <= 0.005;
    Ok(r)
}

fn born_rule(settings: &CriteriaSettings) -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(7);
    let st = bound_state();
    let n = 10_000;
    let cfg = IntegratorConfig::default();
    let e0 = ensemble::sample_quantum_equilibrium(&st, n, settings.seed, 0.0, cfg.node_epsilon).map_err(err)?;
    let series = ensemble::evolve_series(&e0, &st, &st.potential(), Law::DeBroglie, TAU, 10, &cfg).map_err(err)?;
    let diags = ensemble::diagnostics_series(&series, &st, cfg.node_epsilon);
    let crit = ks_critical_value(n);
    let worst = diags[1..].iter().map(|d| d.position_ks).fold(0.0, f64::max);
    r.metric("ks_t0", diags[0].position_ks);
    r.metric("max_ks", worst);
    r.metric("critical", crit);
    r.metric("min_evaluable", diags.iter().map(|d| d.evaluable_fraction).fold(1.0, f64::min));
    r.passed = worst < crit;
    Ok(r)
}

/// Center of the relaxing blob: on the curve `p = dS/dx` at `x = 2`.
pub const RELAXATION_BLOB_X: f64 = 2.0;
pub const RELAXATION_BLOB_SIGMA: f64 = 0.01;
pub const RELAXATION_BLOB_N: usize = 2000;
pub const INSTABILITY_SHIFT: f64 = 0.5;

pub fn relaxation_blob_center(st: &OscillatorSuperposition, shift: f64) -> Result<PhasePoint<1>, String> {
    let p = de_broglie_momentum(st, &[RELAXATION_BLOB_X], 0.0, DEFAULT_NODE_EPSILON).map_err(err)?;
    Ok(PhasePoint::new([RELAXATION_BLOB_X], [p[0] + shift], 0.0))
}

fn instability_witness(settings: &CriteriaSettings) -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(8);
    let st = relaxation_state();
    let cfg = IntegratorConfig::default();
    let mut ratio = |shift: f64, label: &str| -> Result<(f64, f64), String> {
        let c = relaxation_blob_center(&st, shift)?;
        let e0 = ensemble::sample_blob(&c, RELAXATION_BLOB_SIGMA, RELAXATION_BLOB_SIGMA, RELAXATION_BLOB_N, settings.seed)
            .map_err(err)?;
        let e5 = ensemble::evolve(&e0, &st, &st.potential(), Law::Bohm, 5.0, &cfg).map_err(err)?;
        let (m0, m5) = (
            ensemble::momentum_deviation(&e0, &st, cfg.node_epsilon),
            ensemble::momentum_deviation(&e5, &st, cfg.node_epsilon),
        );
        r.metric(format!("{label}_md0"), m0);
        r.metric(format!("{label}_md5"), m5);
        Ok((m0, m5))
    };
    let (a0, a5) = ratio(0.0, "on_shell")?;
    let (b0, b5) = ratio(INSTABILITY_SHIFT, "shifted")?;
    r.passed = a5 < a0 && b5 > b0;
    Ok(r)
}

fn ground_state_statics(settings: &CriteriaSettings) -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(9);
    let g = OscillatorSuperposition::ground();
    let pot = g.potential();
    let mut worst_acc: f64 = 0.0;
    for t in [0.0, 1.3, 4.0] {
        for i in 0..=1000 {
            let x = -5.0 + 0.01 * i as f64;
            let a = acceleration(&g, &pot, &[x], t, 1.0, DEFAULT_NODE_EPSILON).map_err(err)?;
            worst_acc = worst_acc.max(a[0].abs());
        }
    }
    r.metric("max_abs_acceleration", worst_acc);

    let offset = 0.5;
    let c = PhasePoint::new([0.2], [offset], 0.0);
    let cfg = IntegratorConfig::default();
    let e0 = ensemble::sample_blob(&c, 0.05, 0.05, 2000, settings.seed).map_err(err)?;
    let series = ensemble::evolve_series(&e0, &g, &pot, Law::Bohm, 10.0, 10, &cfg).map_err(err)?;
    let diags = ensemble::diagnostics_series(&series, &g, cfg.node_epsilon);
    let md0 = diags[0].momentum_deviation;
    let md_drift = diags.iter().map(|d| (d.momentum_deviation - md0).abs()).fold(0.0, f64::max);
    let ks_monotone = diags.windows(2).all(|w| w[1].position_ks > w[0].position_ks);
    r.metric("md_drift", md_drift);
    r.metric("ks_t0", diags[0].position_ks);
    r.metric("ks_t10", diags.last().map(|d| d.position_ks).unwrap_or(f64::NAN));
    r.metric("ks_monotone", if ks_monotone { 1.0 } else { 0.0 });
    r.passed = worst_acc < 1e-8 && md_drift < 1e-10 && ks_monotone;
    Ok(r)
}

pub const ESCAPE_START: f64 = 5.0;

/// `sqrt(4 / x0)`: the escape speed for the bound `a > -2/x^2`.
pub fn reference_escape_speed() -> f64 {
    dynamics::escape_velocity(2.0, ESCAPE_START).expect("positive inputs")
}

fn escape() -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(10);
    let st = bound_state();
    let pot = st.potential();
    let cfg = IntegratorConfig::default();
    let v_ref = reference_escape_speed();
    let fast = integrate_bohm(&st, &pot, &[ESCAPE_START], &[1.1 * v_ref], 0.0, 100.0, &cfg).map_err(err)?;
    let escaped = matches!(fast.termination, Termination::Escaped { .. });
    let last = fast.last();
    r.metric("fast_escape_time", if escaped { last.t } else { f64::NAN });
    r.metric("fast_terminal_velocity", last.p[0]);
    let tail_outward = fast.samples.iter().filter(|s| s.q[0] > ESCAPE_START).all(|s| s.p[0] > 0.0);
    r.metric("fast_outward_throughout", if tail_outward { 1.0 } else { 0.0 });
    r.passed = escaped && last.p[0] > 0.0 && last.q[0] > 20.0;

    // The slow half is an expectation, not a theorem: reported only.
    let slow = integrate_bohm(&st, &pot, &[ESCAPE_START], &[0.5 * v_ref], 0.0, 100.0, &cfg).map_err(err)?;
    let slow_escaped = matches!(slow.termination, Termination::Escaped { .. });
    r.metric("slow_escaped", if slow_escaped { 1.0 } else { 0.0 });
    if slow_escaped {
        r.notes.push(format!(
            "informational: v0 = 0.5 sqrt(4/5) also escapes (t = {:.2}); escape threshold from x0 = 5 is {:.4}",
            slow.last().t,
            escape_threshold(&st, &cfg).unwrap_or(f64::NAN)
        ));
    } else {
        r.notes.push("informational: v0 = 0.5 sqrt(4/5) stays bound to t = 100".into());
    }
    Ok(r)
}

/// Smallest initial speed from `x = 5` that escapes by `t = 100`, by bisection
/// between the on-shell momentum and `sqrt(4/5)`.
pub fn escape_threshold(st: &OscillatorSuperposition, cfg: &IntegratorConfig) -> Option<f64> {
    let escapes = |v: f64| {
        integrate_bohm(st, &st.potential(), &[ESCAPE_START], &[v], 0.0, 100.0, cfg)
            .map(|tr| matches!(tr.termination, Termination::Escaped { .. }))
            .unwrap_or(false)
    };
    let mut lo = de_broglie_momentum(st, &[ESCAPE_START], 0.0, cfg.node_epsilon).ok()?[0];
    let mut hi = reference_escape_speed();
    if escapes(lo) || !escapes(hi) {
        return None;
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if escapes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

pub const LIOUVILLE_CENTER_X: f64 = 0.5;

fn liouville() -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(11);
    let st = bound_state();
    let p = de_broglie_momentum(&st, &[LIOUVILLE_CENTER_X], 0.0, DEFAULT_NODE_EPSILON).map_err(err)?;
    let center = PhasePoint::new([LIOUVILLE_CENTER_X], p, 0.0);
    let field = dynamics::BohmForce {
        state: &st,
        potential: st.potential(),
    };
    let cfg = IntegratorConfig::default();
    let quantum = ensemble::liouville_parcel_test(&field, &center, 1e-3, 1.0, &cfg).map_err(err)?;
    let classical_field = ClassicalForce {
        potential: PotentialSpec::unit_oscillator(),
        mass: 1.0,
    };
    let tight = cfg.with_tolerance(1e-11);
    let classical = ensemble::liouville_parcel_test(&classical_field, &center, 1e-3, TAU, &tight).map_err(err)?;
    r.metric("quantum_volume_change", quantum.relative_volume_change);
    r.metric("classical_volume_change", classical.relative_volume_change);
    r.passed = quantum.relative_volume_change.abs() < 1e-2 && classical.relative_volume_change.abs() < 1e-6;
    Ok(r)
}

/// `(a, k)` of the instability run.
pub const MODE_SPEC: (f64, f64) = (2.0, 3.0);

/// Off-shell blob of the mode run: 10% above the mapped escape speed at
/// `xi = 5` along `q_k1`.
pub fn mode_escape_blob(spec: &FieldModeSpec, seed: u64) -> Result<ModeBlob, String> {
    let s = spec.scale();
    let x0 = ESCAPE_START / s;
    let v = field_mode::mapped_escape_velocity(spec, 2.0, x0).map_err(err)?;
    Ok(ModeBlob {
        center: [x0, 0.0],
        sigma_q: 0.05 / s,
        momenta: BlobMomenta::Offset {
            offset: [1.1 * v * spec.effective_mass(), 0.0],
            sigma_p: 0.05 * s,
        },
        n: 500,
        seed,
    })
}

/// On-shell blob of the mode run: positions about `xi = (0.5, 0.5)`, every
/// momentum set to `grad S`.
pub fn mode_on_shell_blob(spec: &FieldModeSpec, seed: u64) -> ModeBlob {
    let s = spec.scale();
    ModeBlob {
        center: [0.5 / s, 0.5 / s],
        sigma_q: 0.1 / s,
        momenta: BlobMomenta::OnShell,
        n: 500,
        seed,
    }
}

fn field_mode_consistency(settings: &CriteriaSettings) -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(12);
    let base = IntegratorConfig::default();

    let unit = FieldModeSpec::new(1.0, 1.0).map_err(err)?;
    let unit_state = field_mode::default_mode_state(&unit).map_err(err)?;
    let blob = mode_on_shell_blob(&unit, settings.seed);
    let blob = ModeBlob {
        momenta: BlobMomenta::Offset {
            offset: [0.3, 0.0],
            sigma_p: 0.05,
        },
        ..blob
    };
    let cfg_unit = field_mode::mode_integrator_config(&unit, &base);
    let mode_run = field_mode::mode_instability_run(&unit, &unit_state, &blob, TAU, 4, &cfg_unit).map_err(err)?;
    let particle = crate::quantum_state::OscillatorState::<2>::product(&bound_state(), &relaxation_state()).map_err(err)?;
    let p = de_broglie_momentum(&particle, &blob.center, 0.0, base.node_epsilon).map_err(err)?;
    let e = ensemble::sample_blob(&PhasePoint::new(blob.center, [p[0] + 0.3, p[1]], 0.0), blob.sigma_q, 0.05, blob.n, blob.seed)
        .map_err(err)?;
    let series = ensemble::evolve_series(&e, &particle, &particle.potential(), Law::Bohm, TAU, 4, &cfg_unit).map_err(err)?;
    let particle_run = ensemble::diagnostics_series(&series, &particle, base.node_epsilon);
    let identical = mode_run == particle_run;
    r.metric("unit_mode_bitwise_identical", if identical { 1.0 } else { 0.0 });

    let spec = FieldModeSpec::new(MODE_SPEC.0, MODE_SPEC.1).map_err(err)?;
    let st = field_mode::default_mode_state(&spec).map_err(err)?;
    let cfg = field_mode::mode_integrator_config(&spec, &base);
    let off = field_mode::mode_instability_run(&spec, &st, &mode_escape_blob(&spec, settings.seed)?, 10.0 * spec.period(), 10, &cfg)
        .map_err(err)?;
    let escape_fraction = off.last().map(|d| d.escape_fraction).unwrap_or(0.0);
    r.metric("off_shell_escape_fraction", escape_fraction);

    let on = field_mode::mode_instability_run(&spec, &st, &mode_on_shell_blob(&spec, settings.seed), spec.period(), 10, &cfg)
        .map_err(err)?;
    // Zero analytically; the numerical floor is the integration error,
    // measured in units of the momentum scale sqrt(m omega).
    let floor = 10.0 * cfg.rel_tol.max(cfg.abs_tol) * spec.scale();
    let worst_rise = on
        .windows(2)
        .map(|w| w[1].momentum_deviation - w[0].momentum_deviation)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_md = on.iter().map(|d| d.momentum_deviation).fold(0.0, f64::max);
    r.metric("on_shell_max_rise", worst_rise);
    r.metric("on_shell_max_md", max_md);
    r.metric("on_shell_floor", floor);
    r.passed = identical && escape_fraction > 0.0 && max_md <= floor;
    Ok(r)
}

fn cancellation(settings: &CriteriaSettings) -> Result<CriterionReport, String> {
    let mut r = CriterionReport::new(13);
    let mut nonzero = 0;
    for i in 0..20 {
        let st = asymptotics::random_superposition(settings.seed ^ 0x13, i, 6).map_err(err)?;
        let t = PI * (i as f64) / 10.0;
        let poly = asymptotics::density_polynomial(&st, t).map_err(err)?;
        let n = poly.degree();
        let num = asymptotics::exact_numerator(&poly).map_err(err)?;
        if !num_traits::Zero::is_zero(&asymptotics::exact_coefficient(&num, 3 * n - 1)) {
            nonzero += 1;
        }
    }
    r.metric("states", 20.0);
    r.metric("nonzero_coefficients", nonzero as f64);
    r.passed = nonzero == 0;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criterion_is_rejected() {
        assert!(matches!(run(0, &CriteriaSettings::default()), Err(CriterionError::Unknown(0))));
        assert!(matches!(run(14, &CriteriaSettings::default()), Err(CriterionError::Unknown(14))));
    }

    #[test]
    fn report_line_format() {
        let mut r = CriterionReport::new(6);
        r.passed = true;
        assert!(r.line().starts_with("[PASS]  6 hydrogen"));
    }
}
