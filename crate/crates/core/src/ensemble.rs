//! Phase-space ensembles evolved along characteristics, plus the diagnostics
//! that separate relaxation from instability.

use std::io::{self, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, ForceField, IntegratorConfig, Law, PhasePoint, Termination};
use crate::quantum_state::{de_broglie_momentum, PotentialSpec, WaveFunction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("ensemble must hold at least one point")]
    Empty,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sampling envelope violated: density {density:.3e} above bound {bound:.3e} ({accepted} accepted of {proposed} proposals)")]
    EnvelopeFailure {
        density: f64,
        bound: f64,
        accepted: usize,
        proposed: usize,
    },
    #[error("rejection sampler stalled after {proposed} proposals ({accepted} accepted)")]
    SamplerStalled { accepted: usize, proposed: usize },
    #[error("no point remains evaluable")]
    NothingEvaluable,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Fate of an ensemble member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointFlag {
    Active,
    Escaped,
    NodeAbort,
    StepFloor,
}

impl PointFlag {
    pub fn label(&self) -> &'static str {
        match self {
            PointFlag::Active => "active",
            PointFlag::Escaped => "escaped",
            PointFlag::NodeAbort => "node_abort",
            PointFlag::StepFloor => "step_floor",
        }
    }

    fn from_termination(t: &Termination) -> Self {
        match t {
            Termination::Completed => PointFlag::Active,
            Termination::Escaped { .. } => PointFlag::Escaped,
            Termination::NodeAbort { .. } => PointFlag::NodeAbort,
            Termination::StepFloor { .. } => PointFlag::StepFloor,
        }
    }
}

/// Equal-weight phase-space sample. Flagged points keep the last state they
/// reached; active points all sit at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<const D: usize> {
    pub points: Vec<PhasePoint<D>>,
    pub flags: Vec<PointFlag>,
    pub time: f64,
    pub seed: u64,
    pub provenance: String,
}

impl<const D: usize> Ensemble<D> {
    pub fn new(points: Vec<PhasePoint<D>>, seed: u64, provenance: impl Into<String>) -> Result<Self, EnsembleError> {
        let Some(first) = points.first() else {
            return Err(EnsembleError::Empty);
        };
        let time = first.t;
        if points.iter().any(|p| p.t != time) {
            return Err(EnsembleError::InvalidParameter("all points must share one time".into()));
        }
        Ok(Self {
            flags: vec![PointFlag::Active; points.len()],
            points,
            time,
            seed,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn active(&self) -> impl Iterator<Item = &PhasePoint<D>> {
        self.points
            .iter()
            .zip(&self.flags)
            .filter(|(_, f)| **f == PointFlag::Active)
            .map(|(p, _)| p)
    }

    /// Adds `shift` to every momentum.
    pub fn shift_momenta(&mut self, shift: &[f64; D]) {
        for p in &mut self.points {
            for i in 0..D {
                p.p[i] += shift[i];
            }
        }
    }

    /// Snapshot CSV: `id,t,q..,p..,flag`.
    pub fn write_csv<W: Write>(&self, mut out: W, axis_names: Option<&[&str]>) -> io::Result<()> {
        let names: Vec<String> = match axis_names {
            Some(n) => n.iter().map(|s| s.to_string()).collect(),
            None => default_axis_names(D),
        };
        let q_cols: Vec<String> = names.iter().map(|n| n.to_string()).collect();
        let p_cols: Vec<String> = names.iter().map(|n| format!("p_{n}")).collect();
        writeln!(out, "id,t,{},{},flag", q_cols.join(","), p_cols.join(","))?;
        for (i, (pt, flag)) in self.points.iter().zip(&self.flags).enumerate() {
            write!(out, "{i},{:.12e}", pt.t)?;
            for x in pt.q.iter().chain(&pt.p) {
                write!(out, ",{x:.12e}")?;
            }
            writeln!(out, ",{}", flag.label())?;
        }
        Ok(())
    }
}

pub(crate) fn default_axis_names(d: usize) -> Vec<String> {
    match d {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=d).map(|i| format!("q{i}")).collect(),
    }
}

fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Uniform box envelope for rejection sampling from `|psi|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingEnvelope<const D: usize> {
    pub lower: [f64; D],
    pub upper: [f64; D],
    /// Upper bound on the density inside the box.
    pub bound: f64,
}

/// Grid points per axis for the envelope scan.
fn scan_resolution(d: usize) -> usize {
    match d {
        1 => 4001,
        2 => 241,
        _ => 61,
    }
}

const ENVELOPE_CUTOFF: f64 = 1e-8;
const ENVELOPE_SAFETY: f64 = 1.5;

fn grid_indices(d: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(d as u32);
    (0..total).map(move |mut k| {
        let mut idx = vec![0; d];
        for slot in idx.iter_mut() {
            *slot = k % n;
            k /= n;
        }
        idx
    })
}

/// Scans a cube of half-width `support_radius` and keeps the box where the
/// density exceeds `1e-8` of the peak, padded by one grid cell.
pub fn sampling_envelope<W, const D: usize>(state: &W, t: f64) -> SamplingEnvelope<D>
where
    W: WaveFunction<D> + ?Sized,
{
    let r = state.support_radius();
    let n = scan_resolution(D);
    let h = 2.0 * r / (n - 1) as f64;
    let coord = |i: usize| -r + h * i as f64;
    let densities: Vec<(Vec<usize>, f64)> = grid_indices(D, n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|idx| {
            let q: [f64; D] = std::array::from_fn(|a| coord(idx[a]));
            let rho = state.local(&q, t).density();
            (idx, if rho.is_finite() { rho } else { 0.0 })
        })
        .collect();
    let peak = densities.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    let mut lo = [usize::MAX; D];
    let mut hi = [0usize; D];
    for (idx, rho) in &densities {
        if *rho > ENVELOPE_CUTOFF * peak {
            for a in 0..D {
                lo[a] = lo[a].min(idx[a]);
                hi[a] = hi[a].max(idx[a]);
            }
        }
    }
    SamplingEnvelope {
        lower: std::array::from_fn(|a| coord(lo[a].saturating_sub(1))),
        upper: std::array::from_fn(|a| coord((hi[a] + 1).min(n - 1))),
        bound: ENVELOPE_SAFETY * peak,
    }
}

const MAX_PROPOSALS_PER_POINT: usize = 1_000_000;

/// Positions from `|psi(q, t)|^2` by rejection against a uniform box,
/// momenta set to `grad S(q, t)`.
pub fn sample_quantum_equilibrium<W, const D: usize>(
    state: &W,
    n: usize,
    seed: u64,
    t: f64,
    node_epsilon: f64,
) -> Result<Ensemble<D>, EnsembleError>
where
    W: WaveFunction<D> + ?Sized,
{
    if n == 0 {
        return Err(EnsembleError::Empty);
    }
    let env = sampling_envelope(state, t);
    let results: Vec<Result<(PhasePoint<D>, usize), EnsembleError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = point_rng(seed, i);
            for tries in 1..=MAX_PROPOSALS_PER_POINT {
                let q: [f64; D] = std::array::from_fn(|a| rng.random_range(env.lower[a]..env.upper[a]));
                let u: f64 = rng.random();
                let rho = state.local(&q, t).density();
                if rho > env.bound {
                    return Err(EnsembleError::EnvelopeFailure {
                        density: rho,
                        bound: env.bound,
                        accepted: i,
                        proposed: tries,
                    });
                }
                if u * env.bound < rho {
                    if let Ok(p) = de_broglie_momentum(state, &q, t, node_epsilon) {
                        return Ok((PhasePoint::new(q, p, t), tries));
                    }
                }
            }
            Err(EnsembleError::SamplerStalled {
                accepted: 0,
                proposed: MAX_PROPOSALS_PER_POINT,
            })
        })
        .collect();
    let mut points = Vec::with_capacity(n);
    let mut proposed = 0;
    for r in results {
        match r {
            Ok((p, tries)) => {
                points.push(p);
                proposed += tries;
            }
            Err(EnsembleError::EnvelopeFailure { density, bound, .. }) => {
                return Err(EnsembleError::EnvelopeFailure {
                    density,
                    bound,
                    accepted: points.len(),
                    proposed,
                })
            }
            Err(EnsembleError::SamplerStalled { proposed: p, .. }) => {
                return Err(EnsembleError::SamplerStalled {
                    accepted: points.len(),
                    proposed: proposed + p,
                })
            }
            Err(e) => return Err(e),
        }
    }
    let provenance = format!(
        "quantum equilibrium at t={t}: rejection from uniform box {:?}..{:?}, bound {:.6e}, acceptance {:.4}",
        env.lower,
        env.upper,
        env.bound,
        n as f64 / proposed as f64
    );
    Ensemble::new(points, seed, provenance)
}

/// Isotropic Gaussian blob about `center`.
pub fn sample_blob<const D: usize>(
    center: &PhasePoint<D>,
    sigma_q: f64,
    sigma_p: f64,
    n: usize,
    seed: u64,
) -> Result<Ensemble<D>, EnsembleError> {
    if n == 0 {
        return Err(EnsembleError::Empty);
    }
    if !center.is_finite() {
        return Err(EnsembleError::InvalidParameter("blob center must be finite".into()));
    }
    let normal = |s: f64| {
        Normal::new(0.0, s).map_err(|_| EnsembleError::InvalidParameter(format!("bad blob width {s}")))
    };
    let (nq, np) = (normal(sigma_q)?, normal(sigma_p)?);
    let points = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = point_rng(seed, i);
            let q = std::array::from_fn(|a| center.q[a] + nq.sample(&mut rng));
            let p = std::array::from_fn(|a| center.p[a] + np.sample(&mut rng));
            PhasePoint::new(q, p, center.t)
        })
        .collect();
    Ensemble::new(
        points,
        seed,
        format!("gaussian blob about q={:?} p={:?}, sigma_q={sigma_q}, sigma_p={sigma_p}", center.q, center.p),
    )
}

/// Evolves every active point to `t1`, recording the ensemble at `checkpoints`
/// evenly spaced steps (the returned series starts with the input).
pub fn evolve_series<W, const D: usize>(
    ensemble: &Ensemble<D>,
    state: &W,
    potential: &PotentialSpec,
    law: Law,
    t1: f64,
    checkpoints: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<Ensemble<D>>, EnsembleError>
where
    W: WaveFunction<D> + ?Sized,
{
    if checkpoints == 0 {
        return Err(EnsembleError::InvalidParameter("need at least one checkpoint".into()));
    }
    let t0 = ensemble.time;
    let dt = (t1 - t0).abs() / checkpoints as f64;
    let mut local_cfg = *cfg;
    local_cfg.sample_interval = (dt > 0.0).then_some(dt);
    local_cfg.validate()?;
    let times: Vec<f64> = (0..=checkpoints)
        .map(|k| if k == checkpoints { t1 } else { t0 + (t1 - t0).signum() * k as f64 * dt })
        .collect();

    let runs: Vec<Vec<(PhasePoint<D>, PointFlag)>> = ensemble
        .points
        .par_iter()
        .zip(&ensemble.flags)
        .map(|(pt, flag)| {
            if *flag != PointFlag::Active || dt == 0.0 {
                return vec![(*pt, *flag); checkpoints + 1];
            }
            let tr = dynamics::integrate(law, state, potential, &pt.q, &pt.p, t0, t1, &local_cfg);
            let tr = match tr {
                Ok(tr) => tr,
                Err(_) => return vec![(*pt, PointFlag::NodeAbort); checkpoints + 1],
            };
            let fate = PointFlag::from_termination(&tr.termination);
            let mut out = Vec::with_capacity(checkpoints + 1);
            let mut last = tr.samples[0];
            for (k, &tk) in times.iter().enumerate() {
                if let Some(s) = tr.samples.iter().find(|s| s.t == tk) {
                    last = *s;
                    out.push((*s, PointFlag::Active));
                } else {
                    if k == 0 {
                        last = *pt;
                    } else if let Some(s) = tr.samples.last() {
                        last = *s;
                    }
                    out.push((last, fate));
                }
            }
            out
        })
        .collect();

    let mut series = Vec::with_capacity(checkpoints + 1);
    for (k, &tk) in times.iter().enumerate() {
        let (points, flags): (Vec<_>, Vec<_>) = runs.iter().map(|r| r[k]).unzip();
        // Escaped points are an outcome; a run where everything aborted is not.
        if flags.iter().all(|f| matches!(f, PointFlag::NodeAbort | PointFlag::StepFloor)) {
            return Err(EnsembleError::NothingEvaluable);
        }
        series.push(Ensemble {
            points,
            flags,
            time: tk,
            seed: ensemble.seed,
            provenance: ensemble.provenance.clone(),
        });
    }
    Ok(series)
}

/// Evolves every active point to `t1`.
pub fn evolve<W, const D: usize>(
    ensemble: &Ensemble<D>,
    state: &W,
    potential: &PotentialSpec,
    law: Law,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Ensemble<D>, EnsembleError>
where
    W: WaveFunction<D> + ?Sized,
{
    let mut series = evolve_series(ensemble, state, potential, law, t1, 1, cfg)?;
    Ok(series.pop().expect("series has two entries"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleDiagnostics {
    pub time: f64,
    /// Root mean square of `|p - grad S|` over evaluable points.
    pub momentum_deviation: f64,
    /// Kolmogorov–Smirnov distance of the position marginal(s) from `|psi|^2`
    /// (maximum over axes).
    pub position_ks: f64,
    pub escape_fraction: f64,
    pub evaluable_fraction: f64,
}

impl EnsembleDiagnostics {
    pub const CSV_HEADER: &'static str = "t,momentum_deviation,position_ks,escape_fraction,evaluable_fraction";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            self.time, self.momentum_deviation, self.position_ks, self.escape_fraction, self.evaluable_fraction
        )
    }
}

pub fn write_diagnostics_csv<W: Write>(mut out: W, rows: &[EnsembleDiagnostics]) -> io::Result<()> {
    writeln!(out, "{}", EnsembleDiagnostics::CSV_HEADER)?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Cumulative marginal distributions of `|psi(., t)|^2` on a uniform grid.
#[derive(Debug, Clone)]
pub struct MarginalCdf {
    lower: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl MarginalCdf {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.lower) / self.step;
        if u <= 0.0 {
            return 0.0;
        }
        let i = u.floor() as usize;
        if i + 1 >= self.cdf.len() {
            return 1.0;
        }
        let f = u - i as f64;
        self.cdf[i] * (1.0 - f) + self.cdf[i + 1] * f
    }
}

fn marginal_resolution(d: usize) -> (usize, usize) {
    // (points along the marginal axis, points along each integrated axis)
    match d {
        1 => (8001, 1),
        2 => (1201, 301),
        _ => (401, 121),
    }
}

/// Marginal CDFs of `|psi|^2` along every axis by trapezoid quadrature over
/// the support cube.
pub fn marginal_cdfs<W, const D: usize>(state: &W, t: f64) -> Vec<MarginalCdf>
where
    W: WaveFunction<D> + ?Sized,
{
    let r = state.support_radius();
    let (n_axis, n_other) = marginal_resolution(D);
    let h_axis = 2.0 * r / (n_axis - 1) as f64;
    let h_other = if n_other > 1 { 2.0 * r / (n_other - 1) as f64 } else { 0.0 };
    (0..D)
        .map(|axis| {
            let density: Vec<f64> = (0..n_axis)
                .into_par_iter()
                .map(|i| {
                    let x = -r + h_axis * i as f64;
                    if D == 1 {
                        let q: [f64; D] = [x; D];
                        return state.local(&q, t).density();
                    }
                    let mut acc = 0.0;
                    for idx in grid_indices(D - 1, n_other) {
                        let mut q = [0.0; D];
                        let mut w = 1.0;
                        let mut j = 0;
                        for (a, qa) in q.iter_mut().enumerate() {
                            if a == axis {
                                *qa = x;
                            } else {
                                let k = idx[j];
                                j += 1;
                                *qa = -r + h_other * k as f64;
                                if k == 0 || k == n_other - 1 {
                                    w *= 0.5;
                                }
                            }
                        }
                        let rho = state.local(&q, t).density();
                        if rho.is_finite() {
                            acc += w * rho;
                        }
                    }
                    acc
                })
                .collect();
            let mut cdf = vec![0.0; n_axis];
            for i in 1..n_axis {
                cdf[i] = cdf[i - 1] + 0.5 * h_axis * (density[i - 1] + density[i]);
            }
            let total = cdf[n_axis - 1];
            for c in &mut cdf {
                *c /= total;
            }
            MarginalCdf {
                lower: -r,
                step: h_axis,
                cdf,
            }
        })
        .collect()
}

/// Two-sided KS distance of a sample against a continuous CDF.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sample.len();
    if n == 0 {
        return 0.0;
    }
    sample.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    sample.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f)
    })
}

/// Five-percent critical value `1.36 / sqrt(n)`.
pub fn ks_critical_value(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

/// Diagnostics against marginal CDFs of `|psi(., ensemble.time)|^2`.
/// An empty `cdfs` skips the KS distance (reported as 0).
pub fn diagnostics_with<W, const D: usize>(
    ensemble: &Ensemble<D>,
    state: &W,
    cdfs: &[MarginalCdf],
    node_epsilon: f64,
) -> EnsembleDiagnostics
where
    W: WaveFunction<D> + ?Sized,
{
    let n = ensemble.len() as f64;
    let t = ensemble.time;
    let evaluable: Vec<(&PhasePoint<D>, [f64; D])> = ensemble
        .active()
        .filter_map(|pt| de_broglie_momentum(state, &pt.q, t, node_epsilon).ok().map(|g| (pt, g)))
        .collect();
    let sq: f64 = evaluable
        .iter()
        .map(|(pt, g)| (0..D).map(|i| (pt.p[i] - g[i]).powi(2)).sum::<f64>())
        .sum();
    let momentum_deviation = if evaluable.is_empty() {
        0.0
    } else {
        (sq / evaluable.len() as f64).sqrt()
    };
    let mut position_ks: f64 = 0.0;
    for (axis, cdf) in cdfs.iter().enumerate().take(D) {
        let mut xs: Vec<f64> = evaluable.iter().map(|(pt, _)| pt.q[axis]).collect();
        position_ks = position_ks.max(ks_distance(&mut xs, |x| cdf.eval(x)));
    }
    let escaped = ensemble.flags.iter().filter(|f| **f == PointFlag::Escaped).count() as f64;
    EnsembleDiagnostics {
        time: t,
        momentum_deviation,
        position_ks,
        escape_fraction: escaped / n,
        evaluable_fraction: evaluable.len() as f64 / n,
    }
}

pub fn diagnostics<W, const D: usize>(ensemble: &Ensemble<D>, state: &W, node_epsilon: f64) -> EnsembleDiagnostics
where
    W: WaveFunction<D> + ?Sized,
{
    let cdfs = marginal_cdfs(state, ensemble.time);
    diagnostics_with(ensemble, state, &cdfs, node_epsilon)
}

pub fn diagnostics_series<W, const D: usize>(
    series: &[Ensemble<D>],
    state: &W,
    node_epsilon: f64,
) -> Vec<EnsembleDiagnostics>
where
    W: WaveFunction<D> + ?Sized,
{
    series.iter().map(|e| diagnostics(e, state, node_epsilon)).collect()
}

/// Momentum deviation only; skips the marginal quadrature.
pub fn momentum_deviation<W, const D: usize>(ensemble: &Ensemble<D>, state: &W, node_epsilon: f64) -> f64
where
    W: WaveFunction<D> + ?Sized,
{
    diagnostics_with(ensemble, state, &[], node_epsilon).momentum_deviation
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleReport {
    /// `|det J| - 1` for the linearized flow map of the parcel.
    pub relative_volume_change: f64,
    pub singular_values: Vec<f64>,
    /// Largest distance between a transported vertex and its linear prediction,
    /// relative to the edge.
    pub vertex_nonlinearity: f64,
}

/// Transports a phase-space cube of side `edge` under Newtonian flow in
/// `field` and measures the change of its volume.
pub fn liouville_parcel_test<F, const D: usize>(
    field: &F,
    center: &PhasePoint<D>,
    edge: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<LiouvilleReport, EnsembleError>
where
    F: ForceField<D> + ?Sized,
{
    if !(edge > 0.0 && edge.is_finite()) {
        return Err(EnsembleError::InvalidParameter(format!("edge must be positive, got {edge}")));
    }
    let dim = 2 * D;
    let h = edge / 2.0;
    let t0 = center.t;
    let mut cfg = *cfg;
    cfg.sample_interval = None;
    let flow = |offset: &[f64]| -> Result<Vec<f64>, EnsembleError> {
        let q: [f64; D] = std::array::from_fn(|i| center.q[i] + offset[i]);
        let p: [f64; D] = std::array::from_fn(|i| center.p[i] + offset[D + i]);
        let tr = dynamics::integrate_newtonian(field, &q, &p, t0, t1, &cfg)?;
        if tr.termination != Termination::Completed {
            return Err(EnsembleError::InvalidParameter(format!(
                "parcel point terminated early ({})",
                tr.termination.label()
            )));
        }
        let end = tr.last();
        Ok(end.q.iter().chain(&end.p).copied().collect())
    };

    let origin = flow(&vec![0.0; dim])?;
    let mut jac = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut plus = vec![0.0; dim];
        let mut minus = vec![0.0; dim];
        plus[k] = h;
        minus[k] = -h;
        let (a, b) = (flow(&plus)?, flow(&minus)?);
        for r in 0..dim {
            jac[(r, k)] = (a[r] - b[r]) / (2.0 * h);
        }
    }
    let mut nonlinearity: f64 = 0.0;
    for mask in 0..(1usize << dim) {
        let offset: Vec<f64> = (0..dim).map(|k| if mask >> k & 1 == 1 { h } else { -h }).collect();
        let end = flow(&offset)?;
        for r in 0..dim {
            let linear: f64 = origin[r] + (0..dim).map(|k| jac[(r, k)] * offset[k]).sum::<f64>();
            nonlinearity = nonlinearity.max((end[r] - linear).abs() / edge);
        }
    }
    let sv = jac.clone().svd(false, false).singular_values;
    let volume: f64 = sv.iter().product();
    Ok(LiouvilleReport {
        relative_volume_change: volume - 1.0,
        singular_values: sv.iter().copied().collect(),
        vertex_nonlinearity: nonlinearity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ClassicalForce;
    use crate::quantum_state::OscillatorSuperposition;

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let mut xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn blob_with_zero_width_is_its_center() {
        let c = PhasePoint::new([0.2], [0.7], 0.0);
        let e = sample_blob(&c, 0.0, 0.0, 50, 3).unwrap();
        assert!(e.points.iter().all(|p| *p == c));
    }

    #[test]
    fn blob_covariance_matches_widths() {
        let c = PhasePoint::new([1.0, -1.0], [0.5, 0.0], 0.0);
        let e = sample_blob(&c, 0.2, 0.4, 10_000, 11).unwrap();
        let n = e.len() as f64;
        for a in 0..2 {
            let vq = e.points.iter().map(|p| (p.q[a] - c.q[a]).powi(2)).sum::<f64>() / n;
            let vp = e.points.iter().map(|p| (p.p[a] - c.p[a]).powi(2)).sum::<f64>() / n;
            assert!((vq / 0.04 - 1.0).abs() < 0.1, "{vq}");
            assert!((vp / 0.16 - 1.0).abs() < 0.1, "{vp}");
        }
    }

    #[test]
    fn seeds_reproduce_samples() {
        let st = OscillatorSuperposition::equal_three_level(1.1, 1.8);
        let a = sample_quantum_equilibrium(&st, 200, 5, 0.0, 1e-12).unwrap();
        let b = sample_quantum_equilibrium(&st, 200, 5, 0.0, 1e-12).unwrap();
        let c = sample_quantum_equilibrium(&st, 200, 6, 0.0, 1e-12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn fresh_equilibrium_sample_is_on_shell() {
        let st = OscillatorSuperposition::equal_three_level(1.1, 1.8);
        let e = sample_quantum_equilibrium(&st, 2000, 1, 0.0, 1e-12).unwrap();
        let d = diagnostics(&e, &st, 1e-12);
        assert_eq!(d.momentum_deviation, 0.0);
        assert_eq!(d.escape_fraction, 0.0);
        assert_eq!(d.evaluable_fraction, 1.0);
    }

    #[test]
    fn ground_state_sample_passes_ks_and_mean() {
        let g = OscillatorSuperposition::ground();
        let n = 10_000;
        let e = sample_quantum_equilibrium(&g, n, 42, 0.0, 1e-12).unwrap();
        let d = diagnostics(&e, &g, 1e-12);
        assert!(d.position_ks < ks_critical_value(n), "{}", d.position_ks);
    }

    #[test]
    fn marginal_cdf_matches_erf_for_ground_state() {
        // |phi_0|^2 is a normal density with variance 1/2.
        let g = OscillatorSuperposition::ground();
        let cdfs = marginal_cdfs(&g, 0.0);
        let oracle = |x: f64| {
            // Simpson on [−12, x] of exp(−s^2)/sqrt(pi)
            let a = -12.0;
            let m = 20_000;
            let h = (x - a) / m as f64;
            let f = |s: f64| (-s * s).exp() / std::f64::consts::PI.sqrt();
            let mut acc = f(a) + f(x);
            for i in 1..m {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
            }
            acc * h / 3.0
        };
        for x in [-2.0, -0.7, 0.0, 0.3, 1.9] {
            assert!((cdfs[0].eval(x) - oracle(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn classical_rotation_preserves_volume() {
        let field = ClassicalForce {
            potential: PotentialSpec::unit_oscillator(),
            mass: 1.0,
        };
        let c = PhasePoint::new([0.4], [-0.3], 0.0);
        let cfg = IntegratorConfig::default().with_tolerance(1e-11);
        let rep = liouville_parcel_test(&field, &c, 1e-3, 2.0 * std::f64::consts::PI, &cfg).unwrap();
        assert!(rep.relative_volume_change.abs() < 1e-6, "{rep:?}");
    }

    #[test]
    fn ground_state_shear_preserves_volume() {
        let g = OscillatorSuperposition::ground();
        let field = dynamics::BohmForce {
            state: &g,
            potential: g.potential(),
        };
        let c = PhasePoint::new([0.1], [0.2], 0.0);
        let rep = liouville_parcel_test(&field, &c, 1e-3, 3.0, &IntegratorConfig::default()).unwrap();
        assert!(rep.relative_volume_change.abs() < 1e-6, "{rep:?}");
    }

    #[test]
    fn escaped_blob_counts_fully() {
        let g = OscillatorSuperposition::ground();
        let c = PhasePoint::new([0.0], [5.0], 0.0);
        let e = sample_blob(&c, 0.01, 0.01, 20, 2).unwrap();
        let cfg = IntegratorConfig::default();
        let out = evolve(&e, &g, &g.potential(), Law::Bohm, 10.0, &cfg).unwrap();
        let d = diagnostics(&out, &g, 1e-12);
        assert_eq!(d.escape_fraction, 1.0);
    }
}
