//! Scenario files.
//!
//! A scenario is TOML: `[section]` headers and `key = value` lines. Each
//! command starts from a built-in preset and the user's file is merged over it
//! key by key, so a file only needs the values it changes.

use std::path::PathBuf;

use num_complex::Complex64;
use pilotwave::dynamics::{IntegratorConfig, Law};
use pilotwave::field_mode::FieldModeSpec;
use pilotwave::quantum_state::{HydrogenState, HydrogenTerm, OscillatorState, OscillatorSuperposition, OscillatorTerm};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub state: StateSection,
    pub integrator: IntegratorSection,
    pub trajectory: Option<TrajectorySection>,
    pub ensemble: Option<EnsembleSection>,
    pub field: Option<FieldSection>,
    pub grid: Option<GridSection>,
    pub liouville: Option<LiouvilleSection>,
    pub field_mode: Option<FieldModeSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Oscillator,
    Hydrogen,
}

/// Oscillator terms are `[level, modulus, phase]`; hydrogen terms are
/// `[n, l, m, modulus, phase]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub kind: StateKind,
    pub terms: Vec<Vec<f64>>,
    pub mass: f64,
    pub omega: f64,
    pub normalize: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub escape_radius: f64,
    pub node_epsilon: f64,
    pub max_steps: usize,
    pub sample_interval: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub law: String,
    pub q0: Vec<f64>,
    /// Added to `grad S(q0)` for Bohm runs.
    pub p_offset: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    /// Extra Bohm runs with these momentum offsets.
    #[serde(default)]
    pub perturbations: Vec<Vec<f64>>,
    #[serde(default)]
    pub de_broglie_reference: bool,
    /// Compare the main run with the reference up to this time.
    pub agreement_until: Option<f64>,
    pub agreement_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleSource {
    Blob,
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Momentum deviation at the end below its initial value.
    Relaxes,
    /// Momentum deviation at the end above its initial value.
    Departs,
    /// KS distance below 1.36/sqrt(n) at every checkpoint.
    Equilibrium,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub law: String,
    pub source: EnsembleSource,
    pub n: usize,
    pub center_q: Vec<f64>,
    /// Blob momentum center; `grad S(center_q)` when absent.
    pub center_p: Option<Vec<f64>>,
    pub p_shift: Vec<f64>,
    pub sigma_q: f64,
    pub sigma_p: f64,
    pub t1: f64,
    pub checkpoints: usize,
    pub expect: Option<Expectation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub nt: usize,
    pub spacing: Spacing,
    pub b_check: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceKind {
    Bohm,
    Classical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiouvilleSection {
    pub force: ForceKind,
    pub center_q: Vec<f64>,
    pub p_offset: Vec<f64>,
    pub edge: f64,
    pub t1: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeMomenta {
    OnShell,
    Offset,
}

/// Lengths in units of `1/sqrt(m omega)`, momenta in units of `sqrt(m omega)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldModeSection {
    pub a: f64,
    pub k: f64,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub momenta: ModeMomenta,
    pub center_xi: [f64; 2],
    pub sigma_q_xi: f64,
    pub sigma_p_xi: f64,
    /// Offset along `q_k1` as a multiple of the mapped escape speed.
    pub escape_factor: f64,
    pub escape_b: f64,
    pub n: usize,
    pub periods: f64,
    pub checkpoints: usize,
}

const COMMON: &str = r#"
[scenario]
name = "scenario"
seed = 20240611
out = "out"

[state]
kind = "oscillator"
terms = [[0, 0.5773502691896258, 0.0], [1, 0.5773502691896258, 1.1], [2, 0.5773502691896258, 1.8]]
mass = 1.0
omega = 1.0
normalize = true

[integrator]
rel_tol = 1e-9
abs_tol = 1e-9
max_step = 0.25
min_step = 1e-12
escape_radius = 20.0
node_epsilon = 1e-12
max_steps = 200000
"#;

const RELAXATION_TERMS: &str =
    "[[0, 0.5773502691896258, 0.0], [1, 0.5773502691896258, 2.0], [2, 0.5773502691896258, 4.0]]";

const HYDROGEN_TERMS: &str =
    "[[1, 0, 0, 0.5773502691896258, 0.0], [2, 1, 1, 0.5773502691896258, 1.0], [3, 2, -1, 0.5773502691896258, 2.0]]";

/// Preset overlay for each command and figure, merged over [`COMMON`].
pub fn preset(name: &str) -> Option<String> {
    let body = match name {
        "field-sample" => r#"
[scenario]
name = "field-sample"
out = "out/field-sample"
[field]
x_lo = -5.0
x_hi = 5.0
nx = 201
times = [0.0, 1.5707963267948966, 3.141592653589793]
"#
        .to_string(),
        "trajectory" => r#"
[scenario]
name = "trajectory"
out = "out/trajectory"
[integrator]
sample_interval = 0.01
[trajectory]
law = "bohm"
q0 = [0.5]
p_offset = [0.0]
t0 = 0.0
t1 = 10.0
de_broglie_reference = true
"#
        .to_string(),
        "ensemble" => r#"
[scenario]
name = "ensemble"
out = "out/ensemble"
[ensemble]
law = "de_broglie"
source = "equilibrium"
n = 10000
center_q = [0.0]
p_shift = [0.0]
sigma_q = 0.0
sigma_p = 0.0
t1 = 6.283185307179586
checkpoints = 10
expect = "equilibrium"
"#
        .to_string(),
        "asymptotic-bound" | "fig1" => format!(
            r#"
[scenario]
name = "{name}"
out = "out/{name}"
[grid]
x_lo = 3.0
x_hi = 10.0
nx = 400
nt = 200
spacing = "uniform"
b_check = 2.0
"#
        ),
        "liouville" => r#"
[scenario]
name = "liouville"
out = "out/liouville"
[liouville]
force = "bohm"
center_q = [0.5]
p_offset = [0.0]
edge = 1e-3
t1 = 1.0
tolerance = 1e-2
"#
        .to_string(),
        "field-mode" => r#"
[scenario]
name = "field-mode"
out = "out/field-mode"
[field_mode]
a = 2.0
k = 3.0
first = [[0, 0.5773502691896258, 0.0], [1, 0.5773502691896258, 1.1], [2, 0.5773502691896258, 1.8]]
second = [[0, 0.5773502691896258, 0.0], [1, 0.5773502691896258, 2.0], [2, 0.5773502691896258, 4.0]]
momenta = "offset"
center_xi = [5.0, 0.0]
sigma_q_xi = 0.05
sigma_p_xi = 0.05
escape_factor = 1.1
escape_b = 2.0
n = 500
periods = 10.0
checkpoints = 10
"#
        .to_string(),
        "fig2" | "fig3" => {
            let (shift, expect) = if name == "fig2" { (0.0, "relaxes") } else { (0.5, "departs") };
            format!(
                r#"
[scenario]
name = "{name}"
out = "out/{name}"
[state]
terms = {RELAXATION_TERMS}
[ensemble]
law = "bohm"
source = "blob"
n = 2000
center_q = [2.0]
p_shift = [{shift:?}]
sigma_q = 0.01
sigma_p = 0.01
t1 = 5.0
checkpoints = 5
expect = "{expect}"
"#
            )
        }
        "fig4" => format!(
            r#"
[scenario]
name = "fig4"
out = "out/fig4"
[state]
kind = "hydrogen"
terms = {HYDROGEN_TERMS}
[integrator]
escape_radius = 50.0
sample_interval = 0.01
[trajectory]
law = "bohm"
q0 = [0.5, 0.5, 0.5]
p_offset = [0.0, 0.0, 0.0]
t0 = 0.0
t1 = 30.0
perturbations = [[-0.01, 0.01, 0.02], [0.05, 0.05, 0.05], [0.1, 0.1, 0.1]]
de_broglie_reference = true
agreement_until = 10.0
agreement_tolerance = 1e-5
"#
        ),
        "selftest" => r#"
[scenario]
name = "selftest"
out = "out/selftest"
"#
        .to_string(),
        _ => return None,
    };
    Some(body)
}

fn parse_table(text: &str, origin: &str) -> Result<Table, CliError> {
    text.parse::<Table>()
        .map_err(|e| CliError::Config(format!("{origin}: {}", e.to_string().trim_end())))
}

fn merge(base: &mut Table, over: Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Preset for `name` with the optional user file merged over it. Returns the
/// effective config and its canonical TOML text.
pub fn load(name: &str, user: Option<(&str, &str)>) -> Result<(ScenarioConfig, String), CliError> {
    let overlay = preset(name).ok_or_else(|| CliError::Usage(format!("unknown scenario `{name}`")))?;
    let mut table = parse_table(COMMON, "built-in defaults")?;
    merge(&mut table, parse_table(&overlay, "built-in preset")?);
    if let Some((origin, text)) = user {
        merge(&mut table, parse_table(text, origin)?);
    }
    let canonical = toml::to_string(&table).map_err(|e| CliError::Config(e.to_string()))?;
    let cfg: ScenarioConfig = toml::from_str(&canonical).map_err(|e| {
        CliError::Config(format!("{}: {}", user.map(|u| u.0).unwrap_or("preset"), e.message()))
    })?;
    Ok((cfg, canonical))
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn index(x: f64, what: &str) -> Result<usize, CliError> {
    if x >= 0.0 && x.fract() == 0.0 && x < 1e6 {
        Ok(x as usize)
    } else {
        Err(bad(format!("{what} must be a non-negative integer, got {x}")))
    }
}

pub fn oscillator_terms(rows: &[Vec<f64>], what: &str) -> Result<Vec<OscillatorTerm<1>>, CliError> {
    rows.iter()
        .map(|r| match r.as_slice() {
            &[n, modulus, phase] => Ok(OscillatorTerm::polar(index(n, &format!("{what} level"))?, modulus, phase)),
            _ => Err(bad(format!("{what}: oscillator terms are [level, modulus, phase], got {r:?}"))),
        })
        .collect()
}

fn normalize(coeffs: &mut [Complex64]) -> Result<(), CliError> {
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(bad("state coefficients have zero or non-finite norm"));
    }
    coeffs.iter_mut().for_each(|c| *c /= norm);
    Ok(())
}

pub fn unit_superposition(rows: &[Vec<f64>], what: &str, normalized: bool) -> Result<OscillatorSuperposition, CliError> {
    let terms = oscillator_terms(rows, what)?;
    let st = if normalized {
        OscillatorState::normalized(terms, 1.0, 1.0)
    } else {
        OscillatorState::new(terms, 1.0, 1.0)
    };
    st.map_err(|e| bad(format!("{what}: {e}")))
}

pub enum LoadedState {
    Oscillator(OscillatorSuperposition),
    Hydrogen(HydrogenState),
}

impl StateSection {
    pub fn build(&self) -> Result<LoadedState, CliError> {
        match self.kind {
            StateKind::Oscillator => {
                let terms = oscillator_terms(&self.terms, "state")?;
                let st = if self.normalize {
                    OscillatorState::normalized(terms, self.mass, self.omega)
                } else {
                    OscillatorState::new(terms, self.mass, self.omega)
                };
                Ok(LoadedState::Oscillator(st.map_err(|e| bad(format!("state: {e}")))?))
            }
            StateKind::Hydrogen => {
                let mut terms = self
                    .terms
                    .iter()
                    .map(|r| match r.as_slice() {
                        &[n, l, m, modulus, phase] => {
                            if m.fract() != 0.0 {
                                return Err(bad(format!("state: m must be an integer, got {m}")));
                            }
                            Ok(HydrogenTerm {
                                n: index(n, "n")?,
                                l: index(l, "l")?,
                                m: m as i64,
                                coeff: Complex64::from_polar(modulus, phase),
                            })
                        }
                        _ => Err(bad(format!("state: hydrogen terms are [n, l, m, modulus, phase], got {r:?}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if self.normalize {
                    let mut c: Vec<Complex64> = terms.iter().map(|t| t.coeff).collect();
                    normalize(&mut c)?;
                    terms.iter_mut().zip(c).for_each(|(t, c)| t.coeff = c);
                }
                Ok(LoadedState::Hydrogen(HydrogenState::new(terms).map_err(|e| bad(format!("state: {e}")))?))
            }
        }
    }
}

impl IntegratorSection {
    pub fn build(&self) -> Result<IntegratorConfig, CliError> {
        let cfg = IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            min_step: self.min_step,
            escape_radius: self.escape_radius,
            node_epsilon: self.node_epsilon,
            sample_interval: self.sample_interval,
            max_steps: self.max_steps,
        };
        cfg.validate().map_err(|e| bad(format!("integrator: {e}")))?;
        Ok(cfg)
    }
}

pub fn law(name: &str) -> Result<Law, CliError> {
    name.parse().map_err(|e| bad(format!("law: {e}")))
}

pub fn fixed<const D: usize>(v: &[f64], what: &str) -> Result<[f64; D], CliError> {
    let arr: [f64; D] = v
        .try_into()
        .map_err(|_| bad(format!("{what} needs {D} components for this state, got {}", v.len())))?;
    if arr.iter().all(|x| x.is_finite()) {
        Ok(arr)
    } else {
        Err(bad(format!("{what} must be finite, got {v:?}")))
    }
}

pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    section.as_ref().ok_or_else(|| bad(format!("missing [{name}] section")))
}

impl FieldModeSection {
    pub fn spec(&self) -> Result<FieldModeSpec, CliError> {
        FieldModeSpec::new(self.a, self.k).map_err(|e| bad(format!("field_mode: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for name in [
            "field-sample",
            "trajectory",
            "ensemble",
            "asymptotic-bound",
            "liouville",
            "field-mode",
            "fig1",
            "fig2",
            "fig3",
            "fig4",
            "selftest",
        ] {
            let (cfg, _) = load(name, None).unwrap_or_else(|e| panic!("{name}: {e}"));
            cfg.state.build().unwrap();
            cfg.integrator.build().unwrap();
        }
    }

    #[test]
    fn user_values_override_preset() {
        let (cfg, _) = load("fig2", Some(("user.toml", "[ensemble]\nn = 17\n"))).unwrap();
        let e = cfg.ensemble.unwrap();
        assert_eq!(e.n, 17);
        assert_eq!(e.center_q, vec![2.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = load("trajectory", Some(("user.toml", "[trajectory]\nt1 = = 3\n"))).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load("trajectory", Some(("user.toml", "[trajectory]\ntime = 3\n"))).unwrap_err();
        assert!(err.to_string().contains("time"), "{err}");
    }

    #[test]
    fn bad_terms_are_rejected_before_running() {
        let (cfg, _) = load("trajectory", Some(("u", "[state]\nterms = [[1.5, 1.0, 0.0]]\n"))).unwrap();
        assert!(cfg.state.build().is_err());
        let (cfg, _) = load("fig4", Some(("u", "[state]\nterms = [[1, 1, 0, 1.0, 0.0]]\n"))).unwrap();
        assert!(cfg.state.build().is_err());
    }
}
