//! Acceptance suite: one test per criterion, printing a pass/fail line
//! each.  Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines.

use orbiteq::acceptance::{self, CriterionResult};

fn report(r: CriterionResult) {
    println!(
        "criterion {:>2} ({}): {} [{}]",
        r.id,
        r.name,
        if r.pass { "PASS" } else { "FAIL" },
        r.detail
    );
    assert!(r.pass, "criterion {} failed: {}", r.id, r.detail);
}

#[test]
fn criterion_01_groupoid_axioms() {
    report(acceptance::criterion_1());
}

#[test]
fn criterion_02_extraction_round_trip() {
    report(acceptance::criterion_2());
}

#[test]
fn criterion_03_iso_iff_stabiliser_preservation() {
    report(acceptance::criterion_3());
}

#[test]
fn criterion_04_eventual_conjugacy_iff_graded_iso() {
    report(acceptance::criterion_4());
}

#[test]
fn criterion_05_flip_decision() {
    report(acceptance::criterion_5());
}

#[test]
fn criterion_06_counting_identities() {
    report(acceptance::criterion_6());
}

#[test]
fn criterion_07_reconstruction() {
    report(acceptance::criterion_7());
}

#[test]
fn criterion_08_stabilisation() {
    report(acceptance::criterion_8());
}

#[test]
fn criterion_09_equivalence_decision() {
    report(acceptance::criterion_9());
}

#[test]
fn criterion_10_group_actions() {
    report(acceptance::criterion_10());
}

#[test]
fn criterion_11_two_sided_conjugacy() {
    report(acceptance::criterion_11());
}
