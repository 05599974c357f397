use std::fmt::Write as _;

use pilotwave::asymptotics::{self, BoundGrid};
use pilotwave::criteria::{self, CriteriaSettings};
use pilotwave::dynamics::{self, BohmForce, ClassicalForce, IntegratorConfig, Law, PhasePoint, Termination, Trajectory};
use pilotwave::ensemble::{self, ks_critical_value, Ensemble};
use pilotwave::field_mode::{self, BlobMomenta, ModeBlob};
use pilotwave::quantum_state::{acceleration, de_broglie_momentum, WaveFunction};

use crate::config::{
    self, fixed, require, EnsembleSource, Expectation, ForceKind, LoadedState, ModeMomenta, ScenarioConfig, Spacing,
};
use crate::output::{Artifacts, Check};
use crate::CliError;

fn num(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn csv_float(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.12e}");
}

fn trajectory_csv<W: WaveFunction<D>, const D: usize>(tr: &Trajectory<D>, state: &W) -> String {
    let mut s = String::from("t");
    for i in 1..=D {
        let _ = write!(s, ",q_{i}");
    }
    for i in 1..=D {
        let _ = write!(s, ",p_{i}");
    }
    s.push_str(",density,quantum_potential\n");
    for pt in &tr.samples {
        let local = state.local(&pt.q, pt.t);
        csv_float(&mut s, pt.t);
        for v in pt.q.iter().chain(&pt.p).chain([local.density(), local.quantum_potential(state.mass())].iter()) {
            s.push(',');
            csv_float(&mut s, *v);
        }
        s.push('\n');
    }
    let _ = match tr.termination {
        Termination::Escaped { radius } => writeln!(s, "# termination: escaped radius={radius:.12e}"),
        Termination::NodeAbort { t } | Termination::StepFloor { t } => {
            writeln!(s, "# termination: {} t={t:.12e}", tr.termination.label())
        }
        Termination::Completed => writeln!(s, "# termination: completed"),
    };
    s
}

fn on_shell<W: WaveFunction<D>, const D: usize>(state: &W, q: &[f64; D], t: f64, eps: f64) -> Result<[f64; D], CliError> {
    de_broglie_momentum(state, q, t, eps).map_err(num)
}

fn add<const D: usize>(a: [f64; D], b: [f64; D]) -> [f64; D] {
    std::array::from_fn(|i| a[i] + b[i])
}

/// Largest distance between the runs at shared sample times up to `until`.
/// `None` if either run stops before `until`.
fn separation_until<const D: usize>(a: &Trajectory<D>, b: &Trajectory<D>, until: f64) -> Option<f64> {
    if a.last().t < until - 1e-9 || b.last().t < until - 1e-9 {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (x, y) in a.samples.iter().zip(&b.samples).take_while(|(x, _)| x.t <= until + 1e-9) {
        if (x.t - y.t).abs() > 1e-12 {
            return None;
        }
        let d = x.q.iter().zip(&y.q).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(d);
    }
    Some(worst)
}

macro_rules! with_state {
    ($loaded:expr, |$st:ident, $d:ident| $body:expr) => {
        match $loaded {
            LoadedState::Oscillator(ref $st) => {
                const $d: usize = 1;
                $body
            }
            LoadedState::Hydrogen(ref $st) => {
                const $d: usize = 3;
                $body
            }
        }
    };
}

pub fn trajectory(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let loaded = cfg.state.build()?;
    let icfg = cfg.integrator.build()?;
    let sec = require(&cfg.trajectory, "trajectory")?;
    let law = config::law(&sec.law)?;
    with_state!(loaded, |st, D| trajectory_runs::<_, D>(st, sec, law, &icfg, art))
}

fn trajectory_runs<W: WaveFunction<D>, const D: usize>(
    st: &W,
    sec: &config::TrajectorySection,
    law: Law,
    icfg: &IntegratorConfig,
    art: &mut Artifacts,
) -> Result<(), CliError> {
    let q0: [f64; D] = fixed(&sec.q0, "trajectory.q0")?;
    let offset: [f64; D] = fixed(&sec.p_offset, "trajectory.p_offset")?;
    let perturbations = sec
        .perturbations
        .iter()
        .map(|p| fixed::<D>(p, "trajectory.perturbations"))
        .collect::<Result<Vec<_>, _>>()?;
    if !(sec.t0.is_finite() && sec.t1.is_finite()) {
        return Err(CliError::Config("trajectory times must be finite".into()));
    }
    let pot = st.potential();
    let base = on_shell(st, &q0, sec.t0, icfg.node_epsilon)?;
    let main = dynamics::integrate(law, st, &pot, &q0, &add(base, offset), sec.t0, sec.t1, icfg).map_err(num)?;
    art.write(&format!("trajectory_{}.csv", law.name()), trajectory_csv(&main, st).as_bytes())?;
    println!("{} run: {}", law.name(), main.termination.label());

    if sec.de_broglie_reference && law == Law::Bohm {
        let reference = dynamics::integrate_de_broglie(st, &q0, sec.t0, sec.t1, icfg).map_err(num)?;
        art.write("trajectory_de_broglie.csv", trajectory_csv(&reference, st).as_bytes())?;
        if let (Some(until), Some(tol)) = (sec.agreement_until, sec.agreement_tolerance) {
            let sep = separation_until(&main, &reference, until);
            art.check(Check::new(
                "law_agreement",
                sep.is_some_and(|s| s < tol),
                match sep {
                    Some(s) => format!("sup |q_bohm - q_de_broglie| on [{}, {until}] = {s:.3e} (tolerance {tol:e})", sec.t0),
                    None => format!("a run stopped before t = {until} or the sample grids differ"),
                },
            ));
        }
    }
    for (k, dp) in perturbations.iter().enumerate() {
        let tr = dynamics::integrate_bohm(st, &pot, &q0, &add(base, *dp), sec.t0, sec.t1, icfg).map_err(num)?;
        art.write(&format!("trajectory_bohm_perturbed_{}.csv", k + 1), trajectory_csv(&tr, st).as_bytes())?;
        println!("bohm run with offset {dp:?}: {}", tr.termination.label());
    }
    Ok(())
}

pub fn ensemble(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let loaded = cfg.state.build()?;
    let icfg = cfg.integrator.build()?;
    let sec = require(&cfg.ensemble, "ensemble")?;
    let law = config::law(&sec.law)?;
    with_state!(loaded, |st, D| ensemble_run::<_, D>(st, sec, law, cfg.scenario.seed, &icfg, art))
}

fn ensemble_run<W: WaveFunction<D>, const D: usize>(
    st: &W,
    sec: &config::EnsembleSection,
    law: Law,
    seed: u64,
    icfg: &IntegratorConfig,
    art: &mut Artifacts,
) -> Result<(), CliError> {
    if sec.n == 0 || !(sec.sigma_q >= 0.0 && sec.sigma_p >= 0.0) || !(sec.t1.is_finite()) || sec.checkpoints == 0 {
        return Err(CliError::Config(
            "ensemble: need n > 0, checkpoints > 0, finite t1 and non-negative widths".into(),
        ));
    }
    let initial: Ensemble<D> = match sec.source {
        EnsembleSource::Equilibrium => {
            ensemble::sample_quantum_equilibrium(st, sec.n, seed, 0.0, icfg.node_epsilon).map_err(num)?
        }
        EnsembleSource::Blob => {
            let q: [f64; D] = fixed(&sec.center_q, "ensemble.center_q")?;
            let shift: [f64; D] = fixed(&sec.p_shift, "ensemble.p_shift")?;
            let p = match &sec.center_p {
                Some(p) => fixed(p, "ensemble.center_p")?,
                None => on_shell(st, &q, 0.0, icfg.node_epsilon)?,
            };
            ensemble::sample_blob(&PhasePoint::new(q, add(p, shift), 0.0), sec.sigma_q, sec.sigma_p, sec.n, seed)
                .map_err(num)?
        }
    };
    let series =
        ensemble::evolve_series(&initial, st, &st.potential(), law, sec.t1, sec.checkpoints, icfg).map_err(num)?;
    for (k, e) in series.iter().enumerate() {
        let mut buf = Vec::new();
        e.write_csv(&mut buf, None)?;
        art.write(&format!("ensemble_t{k}.csv"), &buf)?;
    }
    let diags = ensemble::diagnostics_series(&series, st, icfg.node_epsilon);
    let mut buf = Vec::new();
    ensemble::write_diagnostics_csv(&mut buf, &diags)?;
    art.write("diagnostics.csv", &buf)?;
    let (first, last) = (diags[0], diags[diags.len() - 1]);
    match sec.expect {
        Some(Expectation::Relaxes) => art.check(Check::new(
            "relaxes",
            last.momentum_deviation < first.momentum_deviation,
            format!("momentum deviation {:.4e} -> {:.4e}", first.momentum_deviation, last.momentum_deviation),
        )),
        Some(Expectation::Departs) => art.check(Check::new(
            "departs",
            last.momentum_deviation > first.momentum_deviation,
            format!("momentum deviation {:.4e} -> {:.4e}", first.momentum_deviation, last.momentum_deviation),
        )),
        Some(Expectation::Equilibrium) => {
            let crit = ks_critical_value(sec.n);
            let worst = diags.iter().map(|d| d.position_ks).fold(0.0, f64::max);
            art.check(Check::new(
                "equilibrium",
                worst < crit,
                format!("max KS distance {worst:.4e} (critical {crit:.4e})"),
            ));
        }
        None => {}
    }
    Ok(())
}

pub fn field_sample(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let LoadedState::Oscillator(st) = cfg.state.build()? else {
        return Err(CliError::Config("field-sample needs a one-dimensional oscillator state".into()));
    };
    let icfg = cfg.integrator.build()?;
    let sec = require(&cfg.field, "field")?;
    if sec.nx < 2 || !(sec.x_lo < sec.x_hi) || sec.times.is_empty() {
        return Err(CliError::Config("field: need nx >= 2, x_lo < x_hi and at least one time".into()));
    }
    let pot = st.potential();
    let mut s = String::from("t,x,density,velocity,quantum_potential,acceleration\n");
    for &t in &sec.times {
        for i in 0..sec.nx {
            let x = sec.x_lo + (sec.x_hi - sec.x_lo) * i as f64 / (sec.nx - 1) as f64;
            let local = st.local(&[x], t);
            let (v, a) = if local.is_node(icfg.node_epsilon) {
                (f64::NAN, f64::NAN)
            } else {
                let a = acceleration(&st, &pot, &[x], t, st.mass(), icfg.node_epsilon).map_err(num)?;
                (local.phase_gradient()[0] / st.mass(), a[0])
            };
            for (j, val) in [t, x, local.density(), v, local.quantum_potential(st.mass()), a].iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                csv_float(&mut s, *val);
            }
            s.push('\n');
        }
    }
    art.write("field.csv", s.as_bytes())
}

pub fn asymptotic_bound(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let LoadedState::Oscillator(st) = cfg.state.build()? else {
        return Err(CliError::Config("asymptotic-bound needs a one-dimensional oscillator state".into()));
    };
    if !st.is_unit() {
        return Err(CliError::Config("asymptotic-bound needs mass = omega = 1".into()));
    }
    let g = require(&cfg.grid, "grid")?;
    let positive = g.x_lo > 0.0 || g.spacing == Spacing::Uniform;
    if g.nx == 0 || g.nt == 0 || !(g.x_lo < g.x_hi) || !positive {
        return Err(CliError::Config(
            "grid: need nx, nt > 0, x_lo < x_hi, and x_lo > 0 for log spacing".into(),
        ));
    }
    let grid = match g.spacing {
        Spacing::Uniform => BoundGrid::open_uniform(g.x_lo, g.x_hi, g.nx, g.nt),
        Spacing::Log => BoundGrid::log_spaced(g.x_lo, g.x_hi, g.nx, g.nt),
    };
    let report = asymptotics::verify_bound(&st, &grid, g.b_check).map_err(num)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    art.write("bound.csv", &buf)?;
    let mut summary = report.summary();
    if let Ok(b) = asymptotics::asymptotic_bound(&st) {
        let _ = writeln!(
            summary,
            "large-x law: a x^2 -> -{:.6} cos(t - {:.6}) (top level {})",
            b.b, b.phase_offset, b.top_level
        );
    }
    art.write("bound_report.txt", summary.as_bytes())?;
    art.check(Check::new(
        "bound_positive",
        report.holds(),
        format!("min(a + {}/x^2) = {:.6e} over {} points", g.b_check, report.min_margin, report.evaluated),
    ));
    Ok(())
}

pub fn liouville(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let loaded = cfg.state.build()?;
    let icfg = cfg.integrator.build()?;
    let sec = require(&cfg.liouville, "liouville")?;
    with_state!(loaded, |st, D| liouville_run::<_, D>(st, sec, &icfg, art))
}

fn liouville_run<W: WaveFunction<D>, const D: usize>(
    st: &W,
    sec: &config::LiouvilleSection,
    icfg: &IntegratorConfig,
    art: &mut Artifacts,
) -> Result<(), CliError> {
    let q: [f64; D] = fixed(&sec.center_q, "liouville.center_q")?;
    let off: [f64; D] = fixed(&sec.p_offset, "liouville.p_offset")?;
    if !(sec.edge > 0.0 && sec.t1.is_finite() && sec.tolerance > 0.0) {
        return Err(CliError::Config("liouville: need edge > 0, finite t1, tolerance > 0".into()));
    }
    let center = PhasePoint::new(q, add(on_shell(st, &q, 0.0, icfg.node_epsilon)?, off), 0.0);
    let report = match sec.force {
        ForceKind::Bohm => {
            let f = BohmForce {
                state: st,
                potential: st.potential(),
            };
            ensemble::liouville_parcel_test(&f, &center, sec.edge, sec.t1, icfg)
        }
        ForceKind::Classical => {
            let f = ClassicalForce {
                potential: st.potential(),
                mass: st.mass(),
            };
            ensemble::liouville_parcel_test(&f, &center, sec.edge, sec.t1, icfg)
        }
    }
    .map_err(num)?;
    let mut s = format!("relative volume change: {:.6e}\nsingular values:", report.relative_volume_change);
    for v in &report.singular_values {
        let _ = write!(s, " {v:.12e}");
    }
    let _ = writeln!(s, "\nvertex nonlinearity: {:.6e}", report.vertex_nonlinearity);
    art.write("liouville.txt", s.as_bytes())?;
    art.check(Check::new(
        "volume_conserved",
        report.relative_volume_change.abs() < sec.tolerance,
        format!("|dV/V| = {:.3e} (tolerance {:e})", report.relative_volume_change.abs(), sec.tolerance),
    ));
    Ok(())
}

pub fn field_mode(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let sec = require(&cfg.field_mode, "field_mode")?;
    let base = cfg.integrator.build()?;
    let spec = sec.spec()?;
    let first = config::unit_superposition(&sec.first, "field_mode.first", true)?;
    let second = config::unit_superposition(&sec.second, "field_mode.second", true)?;
    let st = field_mode::mode_state(&spec, &first, &second).map_err(|e| CliError::Config(e.to_string()))?;
    if sec.n == 0 || sec.checkpoints == 0 || !(sec.periods > 0.0) || !(sec.sigma_q_xi >= 0.0 && sec.sigma_p_xi >= 0.0) {
        return Err(CliError::Config(
            "field_mode: need n > 0, checkpoints > 0, periods > 0 and non-negative widths".into(),
        ));
    }
    let s = spec.scale();
    let center = [sec.center_xi[0] / s, sec.center_xi[1] / s];
    let momenta = match sec.momenta {
        ModeMomenta::OnShell => BlobMomenta::OnShell,
        ModeMomenta::Offset => {
            let v = field_mode::mapped_escape_velocity(&spec, sec.escape_b, center[0])
                .map_err(|e| CliError::Config(format!("field_mode: {e} (center_xi[0] must be > 0)")))?;
            BlobMomenta::Offset {
                offset: [sec.escape_factor * v * spec.effective_mass(), 0.0],
                sigma_p: sec.sigma_p_xi * s,
            }
        }
    };
    let blob = ModeBlob {
        center,
        sigma_q: sec.sigma_q_xi / s,
        momenta,
        n: sec.n,
        seed: cfg.scenario.seed,
    };
    let icfg = field_mode::mode_integrator_config(&spec, &base);
    let diags = field_mode::mode_instability_run(&spec, &st, &blob, sec.periods * spec.period(), sec.checkpoints, &icfg)
        .map_err(num)?;
    let mut buf = Vec::new();
    ensemble::write_diagnostics_csv(&mut buf, &diags)?;
    art.write("diagnostics.csv", &buf)?;
    let last = diags[diags.len() - 1];
    match sec.momenta {
        ModeMomenta::Offset => art.check(Check::new(
            "escapes",
            last.escape_fraction > 0.0,
            format!("escape fraction {:.4} after {} periods", last.escape_fraction, sec.periods),
        )),
        ModeMomenta::OnShell => {
            let floor = 10.0 * icfg.rel_tol.max(icfg.abs_tol) * s;
            let worst = diags.iter().map(|d| d.momentum_deviation).fold(0.0, f64::max);
            art.check(Check::new(
                "stays_on_shell",
                worst <= floor,
                format!("max momentum deviation {worst:.3e} (integration floor {floor:.3e})"),
            ));
        }
    }
    Ok(())
}

pub fn selftest(only: Option<u8>, seed: u64, art: &mut Artifacts) -> Result<bool, CliError> {
    let settings = CriteriaSettings { seed };
    let numbers: Vec<u8> = match only {
        Some(n) if (1..=criteria::CRITERION_COUNT).contains(&n) => vec![n],
        Some(n) => return Err(CliError::Usage(format!("no criterion {n}; choose 1-{}", criteria::CRITERION_COUNT))),
        None => (1..=criteria::CRITERION_COUNT).collect(),
    };
    let mut text = String::new();
    let mut aborted = false;
    for n in numbers {
        match criteria::run(n, &settings) {
            Ok(r) => {
                println!("{}", r.line());
                let _ = writeln!(text, "{}", r.line());
                let mut detail = Vec::new();
                for (k, v) in &r.metrics {
                    let _ = writeln!(text, "    {k} = {v:.6e}");
                    detail.push(format!("{k}={v:.6e}"));
                }
                for note in &r.notes {
                    println!("     {note}");
                    let _ = writeln!(text, "    note: {note}");
                }
                art.check(Check::new(format!("criterion_{n:02}"), r.passed, detail.join(" ")));
            }
            Err(e) => {
                println!("[ABORT] {n:>2} {}: {e}", criteria::title(n));
                let _ = writeln!(text, "[ABORT] {n:>2} {}: {e}", criteria::title(n));
                art.check(Check::new(format!("criterion_{n:02}"), false, e.to_string()));
                aborted = true;
            }
        }
    }
    art.write("selftest.txt", text.as_bytes())?;
    Ok(aborted)
}
