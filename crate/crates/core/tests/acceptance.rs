//! The verification gate: every registered criterion runs at its pinned
//! tolerance and prints one pass/fail line.

use sobolab::acceptance::{run_criterion, CRITERIA};

fn run(id: usize) {
    let report = run_criterion(id).unwrap_or_else(|e| panic!("criterion {id} errored: {e}"));
    println!(
        "criterion {:2} [{}] {}: {}",
        report.id,
        if report.pass { "PASS" } else { "FAIL" },
        report.name,
        report.measured
    );
    assert!(report.pass, "criterion {id} failed: {}", report.measured);
}

#[test]
fn criterion_01_trace_constant_closed_form() {
    run(1);
}

#[test]
fn criterion_02_adjoint_trace_norm_identity() {
    run(2);
}

#[test]
fn criterion_03_blowup_trend() {
    run(3);
}

#[test]
fn criterion_04_extension_right_inverse() {
    run(4);
}

#[test]
fn criterion_05_fem_convergence() {
    run(5);
}

#[test]
fn criterion_06_aggregate_conormal_vanishing() {
    run(6);
}

#[test]
fn criterion_07_first_green_identity() {
    run(7);
}

#[test]
fn criterion_08_lifting_independence() {
    run(8);
}

#[test]
fn criterion_09_canonical_equals_classical() {
    run(9);
}

#[test]
fn criterion_10_nomination_round_trip() {
    run(10);
}

#[test]
fn criterion_11_second_green_identities() {
    run(11);
}

#[test]
fn criterion_12_commutator_estimate() {
    run(12);
}

#[test]
fn criterion_13_apriori_slack() {
    run(13);
}

#[test]
fn criterion_14_volume_potential_pairing() {
    run(14);
}

#[test]
fn criterion_15_regularity_probe() {
    run(15);
}

#[test]
fn registry_covers_every_criterion() {
    assert_eq!(CRITERIA.len(), 15);
}
