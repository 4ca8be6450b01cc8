//! Acceptance suite: the full reproduction battery, one test per criterion.
//!
//! The battery runs once per process; each test prints its criterion's
//! pass/fail line and asserts it. Tolerances and sizes are pinned in
//! `casecross_cli::reproduce`. Run with `--nocapture` to see every line:
//!
//! ```text
//! cargo test -p casecross-cli --test acceptance -- --nocapture
//! ```

use std::sync::OnceLock;

use casecross_cli::reproduce::{self, CriterionResult};

fn battery() -> &'static [CriterionResult] {
    static RESULTS: OnceLock<Vec<CriterionResult>> = OnceLock::new();
    RESULTS.get_or_init(|| reproduce::run_all(None))
}

fn check(id: &str) {
    let r = battery().iter().find(|r| r.id == id).expect("criterion id");
    println!(
        "[{}] {} {} -- {} ({:.2}s)",
        if r.pass { "PASS" } else { "FAIL" },
        r.id,
        r.label,
        r.detail,
        r.seconds
    );
    assert!(r.pass, "{} failed: {}", r.label, r.detail);
}

#[test]
fn c01_coarse_mh_monte_carlo() {
    check("c1");
}

#[test]
fn c02_coarse_weak_cause_monte_carlo() {
    check("c2");
}

#[test]
fn c03_fine_mh_monte_carlo() {
    check("c3");
}

#[test]
fn c04_independent_approx_closed_form() {
    check("c4");
}

#[test]
fn c05_fine_closed_form() {
    check("c5");
}

#[test]
fn c06_heterogeneity_closed_forms() {
    check("c6");
}

#[test]
fn c07_oracle_equivalence() {
    check("c7");
}

#[test]
fn c08_null_hypothesis_suite() {
    check("c8");
}

#[test]
fn c09_bias_direction() {
    check("c9");
}

#[test]
fn c10_grid_study() {
    check("c10");
}

#[test]
fn c11_thread_determinism() {
    check("c11");
}
