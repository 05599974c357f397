//! Adaptive Dormand-Prince 5(4) integrator for `dy/dt = f(t, y)`.
//!
//! Steps are truncated so that requested checkpoint times are hit exactly.
//! A right-hand side that fails (e.g. near a node of the wave function) is
//! treated as a rejected step; once the step would drop below `h_min` the run
//! stops and reports where.

/// Right-hand side of a first-order system.
pub trait OdeSystem {
    type Error;

    fn dimension(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<(), Self::Error>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Settings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Settings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            h_max: 0.5,
            h_min: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

/// Observer verdict after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<E> {
    Completed,
    /// The observer asked to stop at this time.
    Stopped(f64),
    /// The right-hand side kept failing down to `h_min`.
    RhsFailure { t: f64, error: E },
    /// Error control demanded a step below `h_min`.
    StepFloor(f64),
    MaxSteps(f64),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

fn combine(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut s = 0.0;
        for (a, k) in terms {
            s += a * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

/// Integrates from `t0` to `t1` (either direction), updating `y` in place.
///
/// `checkpoints` must be ordered in the direction of integration and lie in
/// `(t0, t1]`; the integrator lands on each of them exactly. `observer` sees
/// every accepted step as `(t, y, dydt, is_checkpoint)`.
pub fn integrate<S, F>(
    system: &S,
    t0: f64,
    y: &mut [f64],
    t1: f64,
    settings: &Dopri5Settings,
    checkpoints: &[f64],
    mut observer: F,
) -> Outcome<S::Error>
where
    S: OdeSystem,
    F: FnMut(f64, &[f64], &[f64], bool) -> Control,
{
    let n = system.dimension();
    assert_eq!(y.len(), n);
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut st = Stages::new(n);
    let mut t = t0;
    if let Err(error) = system.rhs(t, y, &mut st.k[0]) {
        return Outcome::RhsFailure { t, error };
    }
    if t0 == t1 {
        return Outcome::Completed;
    }

    let mut h = initial_step(y, &st.k[0], settings, (t1 - t0).abs()) * dir;
    let mut next_checkpoint = 0;
    let mut steps = 0;
    let mut last_rejected = false;

    loop {
        if steps >= settings.max_steps {
            return Outcome::MaxSteps(t);
        }
        // land exactly on the next checkpoint or the end
        let target = checkpoints.get(next_checkpoint).copied().unwrap_or(t1);
        let mut hit_target = false;
        let h_natural = h;
        if (t + h - target) * dir >= 0.0 {
            h = target - t;
            hit_target = true;
        }

        steps += 1;
        match try_step(system, t, y, h, &mut st, settings) {
            Err(error) => {
                h *= 0.25;
                if h.abs() < settings.h_min {
                    return Outcome::RhsFailure { t, error };
                }
                last_rejected = true;
                continue;
            }
            Ok(err_norm) => {
                if err_norm <= 1.0 {
                    t = if hit_target { target } else { t + h };
                    y.copy_from_slice(&st.y_new);
                    st.k.swap(0, 6);
                    let is_checkpoint = hit_target && next_checkpoint < checkpoints.len();
                    if is_checkpoint {
                        next_checkpoint += 1;
                    }
                    let done = hit_target && next_checkpoint >= checkpoints.len() && t == t1;
                    if observer(t, y, &st.k[0], is_checkpoint) == Control::Stop {
                        return Outcome::Stopped(t);
                    }
                    if done || (t - t1) * dir >= 0.0 {
                        return Outcome::Completed;
                    }
                    let mut factor = 0.9 * err_norm.max(1e-10).powf(-0.2);
                    factor = factor.clamp(0.2, 10.0);
                    if last_rejected {
                        factor = factor.min(1.0);
                    }
                    last_rejected = false;
                    let base = if hit_target { h_natural.abs().max(h.abs()) } else { (h * factor).abs() };
                    h = base.min(settings.h_max).max(settings.h_min) * dir;
                } else {
                    let factor = (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9);
                    h *= factor;
                    last_rejected = true;
                    if h.abs() < settings.h_min {
                        return Outcome::StepFloor(t);
                    }
                }
            }
        }
    }
}

fn initial_step(y: &[f64], f0: &[f64], settings: &Dopri5Settings, span: f64) -> f64 {
    let n = y.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sk = settings.abs_tol + settings.rel_tol * yi.abs();
        d0 += (yi / sk).powi(2);
        d1 += (fi / sk).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(settings.h_max).min(span).max(settings.h_min)
}

/// One trial step; returns the scaled error norm of the embedded estimate.
fn try_step<S: OdeSystem>(
    system: &S,
    t: f64,
    y: &[f64],
    h: f64,
    st: &mut Stages,
    settings: &Dopri5Settings,
) -> Result<f64, S::Error> {
    let Stages { k, tmp, y_new, err } = st;
    let [k1, k2, k3, k4, k5, k6, k7] = k;

    combine(tmp, y, h, &[(A21, k1)]);
    system.rhs(t + C2 * h, tmp, k2)?;
    combine(tmp, y, h, &[(A31, k1), (A32, k2)]);
    system.rhs(t + C3 * h, tmp, k3)?;
    combine(tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
    system.rhs(t + C4 * h, tmp, k4)?;
    combine(tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
    system.rhs(t + C5 * h, tmp, k5)?;
    combine(tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
    system.rhs(t + h, tmp, k6)?;
    combine(y_new, y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
    system.rhs(t + h, y_new, k7)?;

    let mut sum = 0.0;
    for i in 0..y.len() {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = settings.abs_tol + settings.rel_tol * y[i].abs().max(y_new[i].abs());
        sum += (err[i] / sk).powi(2);
    }
    let norm = (sum / y.len() as f64).sqrt();
    if norm.is_finite() {
        Ok(norm)
    } else {
        Ok(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation;
    impl OdeSystem for Rotation {
        type Error = ();
        fn dimension(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], d: &mut [f64]) -> Result<(), ()> {
            d[0] = y[1];
            d[1] = -y[0];
            Ok(())
        }
    }

    struct Blowup;
    impl OdeSystem for Blowup {
        type Error = &'static str;
        fn dimension(&self) -> usize {
            1
        }
        fn rhs(&self, t: f64, _y: &[f64], d: &mut [f64]) -> Result<(), &'static str> {
            if t > 1.0 {
                return Err("singular");
            }
            d[0] = 1.0;
            Ok(())
        }
    }

    #[test]
    fn harmonic_rotation_is_accurate() {
        let mut y = [1.0, 0.0];
        let s = Dopri5Settings {
            rel_tol: 1e-11,
            abs_tol: 1e-11,
            ..Default::default()
        };
        let out = integrate(&Rotation, 0.0, &mut y, 10.0, &s, &[], |_, _, _, _| Control::Continue);
        assert_eq!(out, Outcome::Completed);
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((y[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn checkpoints_are_hit_exactly_in_both_directions() {
        let s = Dopri5Settings::default();
        let mut seen = Vec::new();
        let mut y = [1.0, 0.0];
        let cps = [0.5, 1.0, 2.5];
        integrate(&Rotation, 0.0, &mut y, 3.0, &s, &cps, |t, _, _, c| {
            if c {
                seen.push(t);
            }
            Control::Continue
        });
        assert_eq!(seen, cps);
        let mut back = Vec::new();
        integrate(&Rotation, 3.0, &mut y, 0.0, &s, &[2.0, 1.0], |t, _, _, c| {
            if c {
                back.push(t);
            }
            Control::Continue
        });
        assert_eq!(back, [2.0, 1.0]);
        assert!((y[0] - 1.0).abs() < 1e-7 && y[1].abs() < 1e-7);
    }

    #[test]
    fn failing_rhs_reports_position() {
        let mut y = [0.0];
        let out = integrate(&Blowup, 0.0, &mut y, 2.0, &Dopri5Settings::default(), &[], |_, _, _, _| {
            Control::Continue
        });
        match out {
            Outcome::RhsFailure { t, error } => {
                assert!(t <= 1.0 && t > 0.99);
                assert_eq!(error, "singular");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_shrinks_at_fifth_order() {
        // halving the tolerance by 2^5 should shrink the end-point error
        let run = |tol: f64| {
            let mut y = [1.0, 0.0];
            let s = Dopri5Settings {
                rel_tol: tol,
                abs_tol: tol,
                ..Default::default()
            };
            integrate(&Rotation, 0.0, &mut y, 20.0, &s, &[], |_, _, _, _| Control::Continue);
            ((y[0] - 20f64.cos()).powi(2) + (y[1] + 20f64.sin()).powi(2)).sqrt()
        };
        let coarse = run(1e-6);
        let fine = run(1e-9);
        assert!(fine < coarse / 50.0, "{coarse} {fine}");
    }
}
