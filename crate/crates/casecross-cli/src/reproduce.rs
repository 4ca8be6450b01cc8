//! The reproduction battery: every headline value and property the toolkit
//! is expected to reproduce, with tolerances pinned in code, runnable as one
//! command and as the acceptance test suite.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use casecross_core::analytic::{
    grid_sweep, tau_correlated_expansion, tau_exact, tau_fine_closed_form,
    tau_independent_approx, GridSpec, HeterogeneityModel,
};
use casecross_core::dgp::{CoarseIndependent, DgpSpec, FineCorrelated, HazardTable, SmallOracle};
use casecross_core::rng::{self, StreamKind};
use casecross_core::sampler::SamplingPlan;

use crate::formats::write_grid_csv;
use crate::runner::{mh_counts, mh_counts_pooled, rct_counts, with_threads};

/// Master seed of the whole battery. Every stochastic criterion derives its
/// streams from this constant, so the battery is one fixed computation.
pub const BATTERY_SEED: u64 = 20_240_917;

// Pinned tolerances and sizes, one block per criterion.
pub const C1_BAND: (f64, f64) = (2.65, 2.95);
pub const C1_SEEDS: u32 = 16;
pub const C1_SUBJECTS: u64 = 100_000;
pub const C1_TIME_LIMIT_SECS: f64 = 5.0;
pub const C2_BAND: (f64, f64) = (2.2, 2.45);
pub const C3_BAND: (f64, f64) = (1.74, 1.94);
pub const C3_TIME_LIMIT_SECS: f64 = 60.0;
pub const C4_EXPECTED: f64 = 1.55 / 1.1;
pub const C4_REL_TOL: f64 = 1e-12;
pub const C5_BAND: (f64, f64) = (0.920, 0.925);
pub const C6_CC: (f64, f64) = (5.51, 0.01);
pub const C6_RCT: (f64, f64) = (4.667, 0.001);
pub const C6_COHORT: (f64, f64) = (4.91, 0.01);
pub const C7_INSTANCES: usize = 100;
pub const C7_REL_TOL: f64 = 1e-10;
pub const C7_MC_SUBJECTS: u64 = 10_000_000;
pub const C8_INSTANCES: usize = 20;
pub const C8_TAU_TOL: f64 = 1e-12;
pub const C8_MC_SUBJECTS: u64 = 1_000_000;
pub const C9_INSTANCES: usize = 40;
pub const C10_ROWS: usize = 72_200;
pub const C10_TIME_LIMIT_SECS: f64 = 10.0;
pub const C11_THREADS: (usize, usize) = (2, 3);
pub const MC_SIGMA: f64 = 3.0;

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: &'static str,
    pub label: &'static str,
    pub detail: String,
    pub pass: bool,
    pub seconds: f64,
}

impl CriterionResult {
    /// Fold a wall-clock limit into the verdict.
    fn also_require_time(mut self, limit_secs: f64) -> Self {
        if self.seconds > limit_secs {
            self.pass = false;
            let _ = write!(self.detail, " [exceeded {limit_secs}s]");
        }
        self
    }
}

/// Run the full battery. `threads` bounds the worker count (`None` uses the
/// default pool); results are identical either way.
pub fn run_all(threads: Option<usize>) -> Vec<CriterionResult> {
    with_threads(threads, || {
        vec![
            c1_coarse_strong(),
            c2_coarse_weak(),
            c3_fine(),
            c4_independent_approx(),
            c5_fine_closed_form(),
            c6_heterogeneity(),
            c7_oracle_equivalence(),
            c8_null_suite(),
            c9_bias_direction(),
            c10_grid(),
            c11_thread_determinism(),
        ]
    })
    .expect("thread pool")
}

/// One line per criterion plus a verdict line.
pub fn format_table(results: &[CriterionResult]) -> String {
    let mut out = String::new();
    for r in results {
        let _ = writeln!(
            out,
            "[{}] {:<4} {:<38} {} ({:.2}s)",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.label,
            r.detail,
            r.seconds
        );
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    let _ = writeln!(
        out,
        "{} of {} criteria passed{}",
        results.len() - failed,
        results.len(),
        if failed == 0 { "" } else { " -- FAILURE" }
    );
    out
}

pub fn all_passed(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.pass)
}

// ── Shared builders ───────────────────────────────────────────────────

fn coarse_spec(weight: f64) -> DgpSpec {
    DgpSpec::CoarseIndependent(CoarseIndependent {
        horizon: 24,
        p_u: 0.001,
        w_lag: weight,
        w_now: weight,
        hazard_cap: 0.5,
        beta: 2.0,
        p_a: 0.5,
    })
}

fn fine_spec() -> FineCorrelated {
    FineCorrelated {
        hours: 24,
        steps_per_hour: 3600,
        p_u: 0.001,
        lambda0_coef: 0.000166,
        beta: 2.0,
        p_a: 0.5,
    }
}

fn hetero_example() -> HeterogeneityModel {
    HeterogeneityModel {
        lambda0_g0: 0.001,
        lambda1_g0: 0.002,
        lambda0_g1: 0.0005,
        lambda1_g1: 0.005,
        p_a_g0: 0.8,
        p_a_g1: 0.5,
        p_g: 0.5,
    }
}

fn in_band(value: f64, band: (f64, f64)) -> bool {
    value >= band.0 && value <= band.1
}

fn within(value: f64, center_tol: (f64, f64)) -> bool {
    (value - center_tol.0).abs() <= center_tol.1
}

/// Standard error of the log discordant-pair ratio.
fn log_ratio_se(n10: u64, n01: u64) -> f64 {
    (1.0 / n10 as f64 + 1.0 / n01 as f64).sqrt()
}

/// Deterministic random small-oracle instances.
struct InstanceGen {
    rng: rng::Stream,
}

impl InstanceGen {
    fn new(stream: u64) -> Self {
        InstanceGen { rng: rng::stream(BATTERY_SEED, stream, StreamKind::Auxiliary) }
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * rng::u01(&mut self.rng)
    }

    fn pick(&mut self, choices: &[u32]) -> u32 {
        choices[rng::uniform_index(&mut self.rng, choices.len())]
    }

    /// Hazards bounded into [0.02, 0.25 + weights] with beta * max <= 1;
    /// horizons 3..=6 keep the exact oracle instant.
    fn oracle(&mut self, beta: f64, a_block: u32, u_block: u32) -> SmallOracle {
        let horizon = self.pick(&[3, 4, 5, 6]);
        let hi = 0.9 / beta.max(1.0);
        let base = self.uniform(0.02, 0.25f64.min(hi));
        let w_now = self.uniform(0.0, (hi - base).clamp(0.0, 0.3));
        let w_lag = self.uniform(0.0, (hi - base - w_now).clamp(0.0, 0.3));
        let table = HazardTable::from_fn(horizon, |_, u_now, u_lag| {
            base + w_now * (u_now as u8 as f64) + w_lag * (u_lag as u8 as f64)
        });
        let p_u = self.uniform(0.05, 0.9);
        let p_a = self.uniform(0.2, 0.8);
        let mut spec = SmallOracle::iid(horizon, p_u, p_a, table, beta);
        spec.a_block = a_block;
        spec.u_block = u_block;
        spec
    }
}

// ── Criteria ──────────────────────────────────────────────────────────

fn timed(
    id: &'static str,
    label: &'static str,
    body: impl FnOnce() -> (bool, String),
) -> CriterionResult {
    let start = Instant::now();
    let (pass, detail) = body();
    CriterionResult { id, label, detail, pass, seconds: start.elapsed().as_secs_f64() }
}

/// Strong-common-cause process: pooled MH estimate near 2.8, fast.
fn c1_coarse_strong() -> CriterionResult {
    timed("c1", "coarse MH estimate in [2.65, 2.95]", || {
        let spec = coarse_spec(0.45);
        let plan = SamplingPlan::single_control(1);
        let counts = mh_counts_pooled(&spec, &plan, C1_SUBJECTS, BATTERY_SEED, C1_SEEDS);
        let point = counts.point().unwrap_or(f64::NAN);
        (in_band(point, C1_BAND), format!("point={point:.4} n10={} n01={}", counts.n10, counts.n01))
    })
    .also_require_time(C1_TIME_LIMIT_SECS)
}

/// Weaker common cause: the bias shrinks toward 2.3.
fn c2_coarse_weak() -> CriterionResult {
    timed("c2", "weak-cause MH estimate in [2.2, 2.45]", || {
        let spec = coarse_spec(0.25);
        let plan = SamplingPlan::single_control(1);
        let counts = mh_counts_pooled(&spec, &plan, C1_SUBJECTS, BATTERY_SEED + 100, C1_SEEDS);
        let point = counts.point().unwrap_or(f64::NAN);
        (in_band(point, C2_BAND), format!("point={point:.4} n10={} n01={}", counts.n10, counts.n01))
    })
}

/// Fine process with a one-hour control offset: the bias flips below the
/// true ratio, toward 1.84.
fn c3_fine() -> CriterionResult {
    timed("c3", "fine MH estimate in [1.74, 1.94]", || {
        let spec = DgpSpec::FineCorrelated(fine_spec());
        let plan = SamplingPlan::single_control(3600);
        let counts = mh_counts_pooled(&spec, &plan, C1_SUBJECTS, BATTERY_SEED + 200, C1_SEEDS);
        let point = counts.point().unwrap_or(f64::NAN);
        (in_band(point, C3_BAND), format!("point={point:.4} n10={} n01={}", counts.n10, counts.n01))
    })
    .also_require_time(C3_TIME_LIMIT_SECS)
}

/// The single-active-pattern closed form at the strong coarse parameters is
/// 1.55/1.1 exactly.
fn c4_independent_approx() -> CriterionResult {
    timed("c4", "independent approx tau = 1.55/1.1", || {
        let report =
            tau_independent_approx(&coarse_spec(0.45), &SamplingPlan::single_control(1))
                .expect("coarse approx");
        let rel = ((report.tau - C4_EXPECTED) / C4_EXPECTED).abs();
        (rel <= C4_REL_TOL, format!("tau={:.15} rel_err={rel:.2e}", report.tau))
    })
}

/// Geometric-sum closed form for the fine process.
fn c5_fine_closed_form() -> CriterionResult {
    timed("c5", "fine closed-form tau in [0.920, 0.925]", || {
        let report = tau_fine_closed_form(&fine_spec()).expect("fine closed form");
        (in_band(report.tau, C5_BAND), format!("tau={:.6} limit={:.4}", report.tau, report.limit))
    })
}

/// Two-type worked example: case-crossover limit, trial estimand, naive
/// cohort limit.
fn c6_heterogeneity() -> CriterionResult {
    timed("c6", "heterogeneity limits 5.51/4.667/4.91", || {
        let m = hetero_example();
        let (cc, rct, cohort) = (m.cc_limit(), m.rct_estimand(), m.cohort_limit());
        let pass = within(cc, C6_CC) && within(rct, C6_RCT) && within(cohort, C6_COHORT);
        (pass, format!("cc={cc:.4} rct={rct:.4} cohort={cohort:.4}"))
    })
}

/// Exact-vs-expansion identity and Monte Carlo convergence to `beta * tau`
/// over randomized instances.
fn c7_oracle_equivalence() -> CriterionResult {
    timed("c7", "oracle equivalence on 100 instances", || {
        let mut worst_rel = 0.0f64;
        let mut specs = Vec::with_capacity(C7_INSTANCES);
        let mut gen = InstanceGen::new(7);
        while specs.len() < C7_INSTANCES {
            let beta = gen.uniform(0.5, 2.5);
            let a_block = gen.pick(&[1, 1, 2]);
            let u_block = gen.pick(&[1, 2]);
            let spec = gen.oracle(beta, a_block, u_block);
            specs.push(spec);
        }
        let plan = SamplingPlan::single_control(1);
        for spec in &specs {
            let exact = tau_exact(spec, &plan).expect("exact");
            let expansion = tau_correlated_expansion(spec, &plan).expect("expansion");
            worst_rel = worst_rel.max(((expansion.tau - exact.tau) / exact.tau).abs());
        }
        if worst_rel > C7_REL_TOL {
            return (false, format!("identity worst rel err {worst_rel:.2e}"));
        }
        // Monte Carlo convergence, one large run per instance.
        let failures: Vec<usize> = specs
            .par_iter()
            .enumerate()
            .filter_map(|(i, spec)| {
                let exact = tau_exact(spec, &plan).expect("exact");
                let dgp = DgpSpec::SmallOracle(spec.clone());
                let counts =
                    mh_counts(&dgp, &plan, C7_MC_SUBJECTS, BATTERY_SEED + 17_000 + i as u64);
                let point = counts.point()?;
                let se = log_ratio_se(counts.n10, counts.n01);
                let off = ((point / exact.limit).ln()).abs() > MC_SIGMA * se;
                off.then_some(i)
            })
            .collect();
        (
            failures.is_empty(),
            format!(
                "identity worst rel err {worst_rel:.2e}; MC outside {MC_SIGMA} se: {:?}",
                failures
            ),
        )
    })
}

/// Null effect: no bias, exactly and in Monte Carlo.
fn c8_null_suite() -> CriterionResult {
    timed("c8", "null suite: tau = 1 and MC covers 1", || {
        let mut gen = InstanceGen::new(8);
        let plan = SamplingPlan::single_control(1);
        let mut worst_tau_dev = 0.0f64;
        let mut specs = Vec::new();
        for _ in 0..C8_INSTANCES {
            let u_block = gen.pick(&[1, 2]);
            let spec = gen.oracle(1.0, 1, u_block);
            let report = tau_exact(&spec, &plan).expect("exact");
            worst_tau_dev = worst_tau_dev.max((report.tau - 1.0).abs());
            specs.push(spec);
        }
        if worst_tau_dev > C8_TAU_TOL {
            return (false, format!("tau deviates by {worst_tau_dev:.2e}"));
        }
        let failures: Vec<usize> = specs
            .par_iter()
            .enumerate()
            .filter_map(|(i, spec)| {
                let dgp = DgpSpec::SmallOracle(spec.clone());
                let counts =
                    mh_counts(&dgp, &plan, C8_MC_SUBJECTS, BATTERY_SEED + 800 + i as u64);
                let point = counts.point()?;
                let se = log_ratio_se(counts.n10, counts.n01);
                (point.ln().abs() > MC_SIGMA * se).then_some(i)
            })
            .collect();
        (
            failures.is_empty(),
            format!("tau worst dev {worst_tau_dev:.2e}; MC outside: {failures:?}"),
        )
    })
}

/// Harmful effect with iid treatments biases away from the null in every
/// instance.
fn c9_bias_direction() -> CriterionResult {
    timed("c9", "tau >= 1 under beta = 2, iid treatments", || {
        let mut gen = InstanceGen::new(9);
        let plan = SamplingPlan::single_control(1);
        let mut min_tau = f64::INFINITY;
        for _ in 0..C9_INSTANCES {
            let spec = gen.oracle(2.0, 1, 1);
            let report = tau_exact(&spec, &plan).expect("exact");
            min_tau = min_tau.min(report.tau);
        }
        (min_tau >= 1.0, format!("min tau = {min_tau:.12}"))
    })
}

/// Full grid sweep: cardinality, speed, and no dominant estimator.
fn c10_grid() -> CriterionResult {
    timed("c10", "grid: 72,200 rows, both regions", || {
        let grid = GridSpec::default();
        let rows = grid_sweep(&grid).expect("grid");
        let cc_better = rows.iter().any(|r| r.cc_bias < r.cohort_bias);
        let cohort_better = rows.iter().any(|r| r.cohort_bias < r.cc_bias);
        let pass = rows.len() == C10_ROWS && cc_better && cohort_better;
        (
            pass,
            format!(
                "rows={} cc_better={cc_better} cohort_better={cohort_better}",
                rows.len()
            ),
        )
    })
    .also_require_time(C10_TIME_LIMIT_SECS)
}

/// Primary outputs rendered under two different thread counts must be
/// byte-identical.
fn c11_thread_determinism() -> CriterionResult {
    timed("c11", "thread-count determinism", || {
        let render = |threads: usize| -> String {
            with_threads(Some(threads), || {
                let mut out = String::new();
                let plan1 = SamplingPlan::single_control(1);
                let coarse = coarse_spec(0.45);
                let counts = mh_counts_pooled(&coarse, &plan1, 50_000, BATTERY_SEED, 4);
                let _ = writeln!(out, "coarse {:?}", counts);
                let fine = DgpSpec::FineCorrelated(fine_spec());
                let fine_counts =
                    mh_counts(&fine, &SamplingPlan::single_control(3600), 50_000, BATTERY_SEED);
                let _ = writeln!(out, "fine {:?}", fine_counts);
                let mut gen = InstanceGen::new(11);
                let oracle = gen.oracle(1.5, 2, 1);
                let oracle_counts = mh_counts(
                    &DgpSpec::SmallOracle(oracle.clone()),
                    &plan1,
                    1_000_000,
                    BATTERY_SEED,
                );
                let _ = writeln!(out, "oracle {:?}", oracle_counts);
                let rct = rct_counts(&coarse, 3, 200_000, BATTERY_SEED);
                let _ = writeln!(out, "rct {:?}", rct);
                let grid = GridSpec::default();
                let rows = grid_sweep(&grid).expect("grid");
                let mut csv = Vec::new();
                write_grid_csv(&mut csv, &grid, &rows, crate::VERSION).expect("grid csv");
                let _ = writeln!(out, "grid_bytes={}", csv.len());
                out.push_str(&String::from_utf8(csv).expect("utf8"));
                out
            })
            .expect("pool")
        };
        let a = render(C11_THREADS.0);
        let b = render(C11_THREADS.1);
        (a == b, format!("identical={} bytes={}", a == b, a.len()))
    })
}
