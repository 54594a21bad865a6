//! Acceptance suite: every gate criterion runs at its pinned tolerance and
//! prints one pass/fail line. The same checks back the CLI `check`
//! subcommand.

use kinalign::harness::acceptance;

fn assert_report(r: &acceptance::CriterionReport) {
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_01_kinematics() {
    assert_report(&acceptance::criterion_1());
}

#[test]
fn criterion_02_pair_moment_conservation() {
    assert_report(&acceptance::criterion_2());
}

#[test]
fn criterion_03_entropy_monotonicity() {
    assert_report(&acceptance::criterion_3());
}

#[test]
fn criterion_04_stochastic_validation() {
    assert_report(&acceptance::criterion_4());
}

#[test]
fn criteria_05_09_model_b_conservation_and_entropy_bound() {
    let (c5, c9) = acceptance::criteria_5_and_9();
    assert_report(&c5);
    assert_report(&c9);
}

#[test]
fn criteria_06_07_08_10_epsilon_ladder() {
    let ladder = acceptance::criteria_ladder();
    assert_report(&ladder.c6);
    assert_report(&ladder.c7);
    assert_report(&ladder.c8);
    assert_report(&ladder.c10);
}
