//! The randomized-trial estimand: closed forms, enumeration, and Monte
//! Carlo agreement.

mod common;

use casecross_core::dgp::{
    rct_relative_risk, rct_relative_risk_mc, DgpSpec, HazardTable, SmallOracle, TwoGroup,
};
use casecross_core::Error;

fn two_group_example() -> DgpSpec {
    DgpSpec::TwoGroup(TwoGroup {
        horizon: 24,
        p_g: 0.5,
        lambda0_g0: 0.001,
        lambda0_g1: 0.0005,
        lambda1_g0: 0.002,
        lambda1_g1: 0.005,
        p_a_g0: 0.8,
        p_a_g1: 0.5,
    })
}

#[test]
fn two_group_baseline_step_matches_reference_value() {
    let rr = rct_relative_risk(&two_group_example(), 0).unwrap();
    assert!((rr - 14.0 / 3.0).abs() < 1e-12, "rr = {rr}");
}

#[test]
fn two_group_survivor_mix_drifts_slowly() {
    // Group shares shift as the riskier group depletes; the estimand moves
    // but stays near the baseline value across the horizon.
    let rr0 = rct_relative_risk(&two_group_example(), 0).unwrap();
    let rr23 = rct_relative_risk(&two_group_example(), 23).unwrap();
    assert!(rr23 < rr0);
    assert!((rr23 - rr0).abs() < 0.05);
}

#[test]
fn constant_hazard_ratio_returns_beta_everywhere() {
    let spec = DgpSpec::SmallOracle(SmallOracle::iid(
        5,
        0.5,
        0.6,
        HazardTable::from_fn(5, |q, u_now, _| 0.05 + 0.02 * q as f64 + 0.2 * (u_now as u8 as f64)),
        2.0,
    ));
    for step in 0..5 {
        let rr = rct_relative_risk(&spec, step).unwrap();
        assert!((rr - 2.0).abs() < 1e-12, "step {step}: {rr}");
    }
}

#[test]
fn enumeration_and_monte_carlo_agree() {
    let spec = DgpSpec::SmallOracle(SmallOracle::iid(
        3,
        0.5,
        0.5,
        HazardTable::flat(3, 0.1),
        2.0,
    ));
    let exact = rct_relative_risk(&spec, 2).unwrap();
    let (point, counts) = rct_relative_risk_mc(&spec, 2, 4_000_000, 101).unwrap();
    let point = point.unwrap();
    // Delta-method standard error of the event-count ratio.
    let se = (1.0 / counts.treated_events as f64 + 1.0 / counts.untreated_events as f64).sqrt();
    assert!(
        ((point / exact).ln()).abs() <= 3.0 * se,
        "mc {point} vs exact {exact} (se {se:.2e})"
    );
}

#[test]
fn dead_cohort_is_an_undefined_estimand() {
    // Certain event at step 0: no survivors remain at step 1.
    let spec = DgpSpec::SmallOracle(SmallOracle::iid(
        3,
        0.0,
        0.5,
        HazardTable::from_fn(3, |q, _, _| if q == 0 { 1.0 } else { 0.1 }),
        1.0,
    ));
    assert!(matches!(
        rct_relative_risk(&spec, 1),
        Err(Error::UndefinedEstimand { .. })
    ));
}

#[test]
fn monte_carlo_is_required_for_large_processes() {
    let spec = common::coarse_spec(0.45, 2.0);
    assert!(matches!(
        rct_relative_risk(&spec, 3),
        Err(Error::UnsupportedSpec { .. })
    ));
    let (point, counts) = rct_relative_risk_mc(&spec, 3, 1_000_000, 7).unwrap();
    // Constant hazard ratio: the trial estimand is beta.
    let point = point.unwrap();
    let se = (1.0 / counts.treated_events as f64 + 1.0 / counts.untreated_events as f64).sqrt();
    assert!(((point / 2.0f64).ln()).abs() <= 3.0 * se, "rr = {point} (se {se:.2e})");
}
