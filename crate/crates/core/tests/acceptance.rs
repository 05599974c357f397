//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Thresholds are pinned here and re-applied to the measured values, so a
//! change in the library's own verdict logic cannot quietly move them.

use pilotwave::criteria::{run, CriteriaSettings, CriterionReport};

fn measure(n: u8) -> CriterionReport {
    let report = run(n, &CriteriaSettings::default()).unwrap_or_else(|e| panic!("criterion {n}: {e}"));
    println!("{}", report.line());
    for (name, value) in &report.metrics {
        println!("       {name} = {value:.6e}");
    }
    for note in &report.notes {
        println!("       note: {note}");
    }
    report
}

fn v(r: &CriterionReport, name: &str) -> f64 {
    r.value(name).unwrap_or_else(|| panic!("criterion {} did not report {name}", r.number))
}

fn verdict(r: &CriterionReport, ok: bool) {
    assert_eq!(r.passed, ok, "library verdict disagrees with pinned thresholds");
    assert!(ok, "criterion {} failed: {}", r.number, r.title);
}

#[test]
fn criterion_01_bound_on_figure_grid() {
    let r = measure(1);
    verdict(&r, v(&r, "min_margin") > 0.0 && v(&r, "evaluated") >= 80_000.0);
}

#[test]
fn criterion_02_bound_far_field() {
    let r = measure(2);
    verdict(&r, v(&r, "min_margin") > 0.0 && v(&r, "evaluated") >= 1_600.0);
}

#[test]
fn criterion_03_asymptotic_law() {
    let r = measure(3);
    verdict(&r, v(&r, "max_residual_over_b") < 0.01 && v(&r, "min_decay_factor") >= 5.0);
}

#[test]
fn criterion_04_rational_matches_direct() {
    let r = measure(4);
    verdict(&r, v(&r, "max_relative_error") < 1e-6);
}

#[test]
fn criterion_05_hydrogen_law_agreement() {
    let r = measure(5);
    verdict(&r, r.passed && v(&r, "sup_separation") < 1e-5);
}

#[test]
fn criterion_06_hydrogen_reference_momentum() {
    let r = measure(6);
    let expected = [-0.19, -0.11, -0.02];
    let ok = ["px", "py", "pz"]
        .iter()
        .zip(expected)
        .all(|(axis, e)| (v(&r, axis) - e).abs() <= 0.005);
    verdict(&r, ok);
}

#[test]
fn criterion_07_born_rule_preserved() {
    let r = measure(7);
    let critical = 1.36 / (10_000f64).sqrt();
    verdict(&r, v(&r, "max_ks") < critical);
}

#[test]
fn criterion_08_relaxation_and_instability() {
    let r = measure(8);
    verdict(
        &r,
        v(&r, "on_shell_md5") < v(&r, "on_shell_md0") && v(&r, "shifted_md5") > v(&r, "shifted_md0"),
    );
}

#[test]
fn criterion_09_ground_state_statics() {
    let r = measure(9);
    verdict(
        &r,
        v(&r, "max_abs_acceleration") < 1e-8 && v(&r, "md_drift") < 1e-10 && v(&r, "ks_monotone") == 1.0,
    );
}

#[test]
fn criterion_10_escape() {
    let r = measure(10);
    verdict(
        &r,
        v(&r, "fast_escape_time").is_finite() && v(&r, "fast_terminal_velocity") > 0.0,
    );
}

#[test]
fn criterion_11_liouville() {
    let r = measure(11);
    verdict(
        &r,
        v(&r, "quantum_volume_change").abs() < 1e-2 && v(&r, "classical_volume_change").abs() < 1e-6,
    );
}

#[test]
fn criterion_12_field_mode() {
    let r = measure(12);
    verdict(
        &r,
        v(&r, "unit_mode_bitwise_identical") == 1.0
            && v(&r, "off_shell_escape_fraction") > 0.0
            && v(&r, "on_shell_max_md") <= v(&r, "on_shell_floor"),
    );
}

#[test]
fn criterion_13_exact_cancellation() {
    let r = measure(13);
    verdict(&r, v(&r, "nonzero_coefficients") == 0.0 && v(&r, "states") == 20.0);
}
