//! The acceptance gate: one test per numbered criterion, each printing its
//! pass/fail lines. Criteria 4 and 6 pin parameters at which the
//! dip-minimizer datum (derivative jump at x = 0) is known to defeat the
//! stated tolerances; they are asserted literally and report the measured
//! values, while the solver itself is validated on smooth data in the unit
//! suites and in criteria 5, 7-10.

use madelung_lab::acceptance::{
    criteria_4_and_5, criterion_1, criterion_2, criterion_3, criterion_6, criterion_7,
    criterion_8, criterion_9, criterion_10,
};
use madelung_lab::report::CriterionOutcome;

fn show_and_check(outcome: &CriterionOutcome, budget_s: f64) {
    println!("{}", outcome.summary_line());
    for line in outcome.detail_lines() {
        println!("{line}");
    }
    println!("  runtime budget: {budget_s} s (measured {} ms)", outcome.wall_ms);
    assert!(
        outcome.passed,
        "criterion {} failed:\n{}",
        outcome.id,
        outcome.detail_lines().join("\n")
    );
}

#[test]
fn criterion_01_black_soliton_energy() {
    show_and_check(&criterion_1(false), 1.0);
}

#[test]
fn criterion_02_minimizer_energy_curve() {
    show_and_check(&criterion_2(false), 5.0);
}

#[test]
fn criterion_03_threshold_inverse() {
    show_and_check(&criterion_3(false), 1.0);
}

#[test]
fn criterion_04_wave_flow_energy_conservation() {
    let (c4, _) = criteria_4_and_5(false);
    show_and_check(&c4, 60.0);
}

#[test]
fn criterion_05_no_vacuum_certificate() {
    let (_, c5) = criteria_4_and_5(false);
    show_and_check(&c5, 60.0);
}

#[test]
fn criterion_06_flow_conjugation() {
    show_and_check(&criterion_6(false), 300.0);
}

#[test]
fn criterion_07_phase_infimum_oracle() {
    show_and_check(&criterion_7(false), 30.0);
}

#[test]
fn criterion_08_bilipschitz_probe() {
    show_and_check(&criterion_8(false), 300.0);
}

#[test]
fn criterion_09_dyadic_analysis_suite() {
    show_and_check(&criterion_9(false), 60.0);
}

#[test]
fn criterion_10_madelung_round_trips() {
    show_and_check(&criterion_10(false), 10.0);
}
