//! The multiplicative bias factor of the Mantel-Haenszel case-crossover
//! estimator.
//!
//! Under a constant causal hazard ratio `beta`, the estimator converges to
//! `beta * tau`. Four routes to `tau` are implemented:
//!
//! - [`tau_exact`]: exact enumeration of the untreated-hazard-weighted
//!   discordant masses over all joint draw configurations (small oracles).
//! - [`tau_correlated_expansion`]: the same quantity assembled from its
//!   factorized expansion — per-pattern outcome-cause weight, control-time
//!   survival factor, treatment-trajectory probability, and the survival
//!   product over the remaining steps. Agrees with [`tau_exact`] to
//!   floating-point rounding; the two routes share no summation code.
//! - [`tau_independent_approx`]: the rare-outcome-cause approximation for
//!   iid treatments, keeping only `U` histories with at most one active
//!   draw. Evaluates to a per-step closed form on the coarse process.
//! - [`tau_fine_closed_form`]: the geometric-sum closed form for the
//!   hour-blocked fine process under the same single-active-hour
//!   approximation.

use alloc::vec::Vec;
use core::fmt;

use crate::dgp::{CoarseIndependent, DgpSpec, FineCorrelated, SmallOracle};
use crate::enumerate::{
    enumerate_case_probabilities_with_budget, OracleLayout, DEFAULT_ENUMERATION_BUDGET,
};
use crate::sampler::SamplingPlan;
use crate::{Error, Result, Sum2};

/// How a bias factor was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauMethod {
    /// Exhaustive enumeration of the weighted discordant masses.
    ExactEnumeration,
    /// Single-active-`U` approximation, per-step closed form on the coarse
    /// process.
    CoarseClosedForm,
    /// Single-active-`U` approximation evaluated on a hazard table.
    IndependentApprox,
    /// Geometric-sum closed form for the fine process under the
    /// single-active-hour approximation.
    FineClosedForm,
    /// Factorized expansion over treatment trajectories.
    CorrelatedExpansion,
}

impl TauMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TauMethod::ExactEnumeration => "exact-enumeration",
            TauMethod::CoarseClosedForm => "coarse-closed-form",
            TauMethod::IndependentApprox => "independent-approx",
            TauMethod::FineClosedForm => "fine-closed-form",
            TauMethod::CorrelatedExpansion => "correlated-expansion",
        }
    }
}

impl fmt::Display for TauMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The `U` configuration a decomposition term refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UPattern {
    /// No active outcome-cause draw.
    AllZero,
    /// Exactly one active draw, at this step.
    SingleActive(u32),
    /// Arbitrary configuration, one bit per `U` block.
    Mask(u64),
}

impl fmt::Display for UPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UPattern::AllZero => write!(f, "none"),
            UPattern::SingleActive(s) => write!(f, "u@{s}"),
            UPattern::Mask(m) => write!(f, "mask:{m:b}"),
        }
    }
}

/// One `(case step, offset, U pattern)` contribution to the bias ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasTerm {
    pub case_step: u32,
    pub offset: u32,
    pub u_pattern: UPattern,
    pub numerator: f64,
    pub denominator: f64,
}

/// A bias factor with its provenance and optional decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub beta: f64,
    /// Multiplicative bias factor.
    pub tau: f64,
    /// Probability limit of the estimator: `beta * tau`.
    pub limit: f64,
    pub method: TauMethod,
    pub terms: Option<Vec<BiasTerm>>,
}

impl BiasReport {
    fn from_ratio(
        beta: f64,
        num: f64,
        den: f64,
        method: TauMethod,
        terms: Option<Vec<BiasTerm>>,
    ) -> Result<Self> {
        if !den.is_finite() || den <= 0.0 {
            return Err(Error::UndefinedEstimand {
                detail: "bias-factor denominator has no mass",
            });
        }
        let tau = num / den;
        Ok(BiasReport { beta, tau, limit: beta * tau, method, terms })
    }
}

/// Exact bias factor of a small oracle: the ratio of untreated-hazard
/// weighted discordant masses, by exhaustive enumeration.
pub fn tau_exact(spec: &SmallOracle, plan: &SamplingPlan) -> Result<BiasReport> {
    tau_exact_with_budget(spec, plan, DEFAULT_ENUMERATION_BUDGET)
}

/// As [`tau_exact`] with an explicit enumeration budget.
pub fn tau_exact_with_budget(
    spec: &SmallOracle,
    plan: &SamplingPlan,
    budget: u64,
) -> Result<BiasReport> {
    let table = enumerate_case_probabilities_with_budget(spec, plan, budget)?;
    let (num, den) = table.tau_components();
    BiasReport::from_ratio(spec.beta, num, den, TauMethod::ExactEnumeration, None)
}

/// Single-active-`U` hazards of the coarse process (the cap applies to each
/// single weight).
struct CoarseSingleU {
    /// Untreated hazard at the case step when the active draw is at the
    /// step before it.
    lag0: f64,
    /// Same with the active draw at the case step itself.
    now0: f64,
    /// Treated hazard at a control step governed by its own active draw.
    now1: f64,
}

impl CoarseSingleU {
    fn new(s: &CoarseIndependent) -> Self {
        let cap = |x: f64| if x > s.hazard_cap { s.hazard_cap } else { x };
        let clamp1 = |x: f64| if x > 1.0 { 1.0 } else { x };
        CoarseSingleU {
            lag0: cap(s.w_lag),
            now0: cap(s.w_now),
            now1: clamp1(s.beta * cap(s.w_now)),
        }
    }
}

/// Approximate bias factor for iid-treatment processes, keeping only `U`
/// histories with at most one active draw.
///
/// Treatment-trajectory probabilities cancel between numerator and
/// denominator under iid treatments, as do survival products away from the
/// control step under a rare outcome cause; what remains is the
/// hazard-weighted pattern sum with one survival factor at the control
/// step. On the coarse process every per-step term is proportional, so the
/// result is the per-step closed form itself.
pub fn tau_independent_approx(spec: &DgpSpec, plan: &SamplingPlan) -> Result<BiasReport> {
    spec.validate()?;
    plan.validate_for_horizon(spec.horizon_steps())?;
    match spec {
        DgpSpec::CoarseIndependent(s) => {
            let h = CoarseSingleU::new(s);
            let (mut num, mut den) = (Sum2::new(), Sum2::new());
            let mut terms = Vec::new();
            for step in plan.lookback..s.horizon {
                // Exact single-pattern probability over the U history
                // through the case step.
                let weight = s.p_u * crate::dgp::powi(1.0 - s.p_u, step);
                for &c in &plan.offsets {
                    // Active draw at the step before the case: the case
                    // hazard runs on the lag weight, and for a one-step
                    // offset the control step is governed by that same
                    // draw.
                    let (ctrl0, ctrl1) = if c == 1 { (h.now0, h.now1) } else { (0.0, 0.0) };
                    let n_lag = weight * h.lag0 * (1.0 - ctrl0);
                    let d_lag = weight * h.lag0 * (1.0 - ctrl1);
                    push_term(&mut terms, step, c, UPattern::SingleActive(step - 1), n_lag, d_lag);
                    num.add(n_lag);
                    den.add(d_lag);
                    // Active draw at the case step: no control-time hazard.
                    let n_now = weight * h.now0;
                    push_term(&mut terms, step, c, UPattern::SingleActive(step), n_now, n_now);
                    num.add(n_now);
                    den.add(n_now);
                }
            }
            BiasReport::from_ratio(
                s.beta,
                num.value(),
                den.value(),
                TauMethod::CoarseClosedForm,
                Some(terms),
            )
        }
        DgpSpec::SmallOracle(s) => {
            if s.a_block != 1 || s.p_a.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::UnsupportedSpec {
                    operation: "tau_independent_approx",
                    detail: "treatments must be iid across steps",
                });
            }
            if s.u_block != 1 {
                return Err(Error::UnsupportedSpec {
                    operation: "tau_independent_approx",
                    detail: "single-active patterns require per-step U draws",
                });
            }
            let (mut num, mut den) = (Sum2::new(), Sum2::new());
            let mut terms = Vec::new();
            for step in plan.lookback..s.horizon {
                let w_single = s.p_u * crate::dgp::powi(1.0 - s.p_u, step);
                let w_zero = crate::dgp::powi(1.0 - s.p_u, step + 1);
                for &c in &plan.offsets {
                    let ctrl = step - c;
                    // Patterns: no active draw, then one active draw at each
                    // step through the case step.
                    for active in core::iter::once(None).chain((0..=step).map(Some)) {
                        let at = |q: u32| active == Some(q);
                        let case_h = s.hazard0.rate(step, at(step), step > 0 && at(step - 1));
                        if case_h == 0.0 {
                            continue;
                        }
                        let ctrl0 = s.hazard0.rate(ctrl, at(ctrl), ctrl > 0 && at(ctrl - 1));
                        let ctrl1 = s.beta * ctrl0;
                        let w = if active.is_some() { w_single } else { w_zero };
                        let n = w * case_h * (1.0 - ctrl0);
                        let d = w * case_h * (1.0 - ctrl1);
                        let pat = match active {
                            None => UPattern::AllZero,
                            Some(q) => UPattern::SingleActive(q),
                        };
                        push_term(&mut terms, step, c, pat, n, d);
                        num.add(n);
                        den.add(d);
                    }
                }
            }
            BiasReport::from_ratio(
                s.beta,
                num.value(),
                den.value(),
                TauMethod::IndependentApprox,
                Some(terms),
            )
        }
        _ => Err(Error::UnsupportedSpec {
            operation: "tau_independent_approx",
            detail: "defined for the coarse process and iid-treatment small oracles",
        }),
    }
}

fn push_term(
    terms: &mut Vec<BiasTerm>,
    case_step: u32,
    offset: u32,
    u_pattern: UPattern,
    numerator: f64,
    denominator: f64,
) {
    terms.push(BiasTerm { case_step, offset, u_pattern, numerator, denominator });
}

/// Closed-form bias factor of the fine hour-blocked process with a one-hour
/// control offset, under the single-active-hour approximation.
///
/// With `g_a` the geometric sum of `(1 - lambda_a)^(t-1)` over the steps of
/// an hour and `s_a = (1 - lambda_a)^steps_per_hour` the hourly survival:
/// `tau = g_1 * (s_0 + 1) / (g_0 * (s_1 + 1))`. The two bracket pairs are
/// the survival selections at the case hour (pushing toward the null) and
/// at the control hour (pushing away from it).
pub fn tau_fine_closed_form(spec: &FineCorrelated) -> Result<BiasReport> {
    spec.validate()?;
    let lam0 = spec.lambda0_coef;
    let lam1 = spec.beta * spec.lambda0_coef;
    let steps = spec.steps_per_hour;
    let geometric = |lam: f64| -> f64 {
        if lam == 0.0 {
            steps as f64
        } else {
            (1.0 - crate::dgp::powi(1.0 - lam, steps)) / lam
        }
    };
    let s0 = crate::dgp::powi(1.0 - lam0, steps);
    let s1 = crate::dgp::powi(1.0 - lam1, steps);
    let num = geometric(lam1) * (s0 + 1.0);
    let den = geometric(lam0) * (s1 + 1.0);
    BiasReport::from_ratio(spec.beta, num, den, TauMethod::FineClosedForm, None)
}

/// Bias factor of a small oracle assembled from its factorized expansion:
/// for each case step, `U` configuration, and offset, the outcome-cause
/// weight times the control-step survival factor times the sum over
/// treatment trajectories of trajectory probability times the survival
/// product over the remaining steps.
///
/// Equals [`tau_exact`] up to floating-point rounding on every instance
/// where both are computable; the routes share no summation code.
pub fn tau_correlated_expansion(spec: &SmallOracle, plan: &SamplingPlan) -> Result<BiasReport> {
    tau_correlated_expansion_with_budget(spec, plan, DEFAULT_ENUMERATION_BUDGET)
}

fn tau_correlated_expansion_with_budget(
    spec: &SmallOracle,
    plan: &SamplingPlan,
    budget: u64,
) -> Result<BiasReport> {
    spec.validate()?;
    plan.validate_for_horizon(spec.horizon)?;
    let layout = OracleLayout::new(spec);
    if layout.required_configs() > budget {
        return Err(Error::EnumerationBudget {
            required: layout.required_configs(),
            budget,
        });
    }

    let (mut num, mut den) = (Sum2::new(), Sum2::new());
    let mut terms = Vec::new();
    let mut lam0 = alloc::vec![0.0f64; spec.horizon as usize];
    let mut lam1 = alloc::vec![0.0f64; spec.horizon as usize];
    let mut factors = alloc::vec![0.0f64; spec.horizon as usize];
    let mut prefix = alloc::vec![0.0f64; spec.horizon as usize + 1];
    let mut suffix = alloc::vec![0.0f64; spec.horizon as usize + 1];

    for step in plan.lookback..spec.horizon {
        let u_blocks = step / spec.u_block + 1;
        let a_blocks = step / spec.a_block + 1;
        for u_mask in 0u32..1 << u_blocks {
            let mut p_u_pattern = 1.0;
            for b in 0..u_blocks {
                p_u_pattern *=
                    if u_mask >> b & 1 == 1 { spec.p_u } else { 1.0 - spec.p_u };
            }
            if p_u_pattern == 0.0 {
                continue;
            }
            for q in 0..=step {
                let u_now = layout.u_at(u_mask, q);
                let u_lag = q > 0 && layout.u_at(u_mask, q - 1);
                let l0 = spec.hazard0.rate(q, u_now, u_lag);
                lam0[q as usize] = l0;
                lam1[q as usize] = spec.beta * l0;
            }
            // Outcome-cause weight at this case step.
            let m_weight = lam0[step as usize] * p_u_pattern;
            if m_weight == 0.0 {
                continue;
            }
            // Trajectory sums, per offset and discordant orientation.
            let m = plan.offsets.len();
            let mut s10 = alloc::vec![Sum2::new(); m];
            let mut s01 = alloc::vec![Sum2::new(); m];
            for a_mask in 0u32..1 << a_blocks {
                let mut traj_prob = 1.0;
                for b in 0..a_blocks {
                    let head = spec.p_a[(b * spec.a_block) as usize];
                    traj_prob *= if a_mask >> b & 1 == 1 { head } else { 1.0 - head };
                }
                if traj_prob == 0.0 {
                    continue;
                }
                // Survival factors over steps before the case step;
                // prefix/suffix products give each leave-one-out product
                // without division.
                for q in 0..step {
                    let lam = if layout.a_at(a_mask, q) {
                        lam1[q as usize]
                    } else {
                        lam0[q as usize]
                    };
                    factors[q as usize] = 1.0 - lam;
                }
                let n = step as usize;
                prefix[0] = 1.0;
                for q in 0..n {
                    prefix[q + 1] = prefix[q] * factors[q];
                }
                suffix[n] = 1.0;
                for q in (0..n).rev() {
                    suffix[q] = factors[q] * suffix[q + 1];
                }
                let a_case = layout.a_at(a_mask, step);
                for (l, &c) in plan.offsets.iter().enumerate() {
                    let ctrl = (step - c) as usize;
                    let a_ctrl = layout.a_at(a_mask, step - c);
                    let leave_one_out = prefix[ctrl] * suffix[ctrl + 1];
                    match (a_case, a_ctrl) {
                        (true, false) => s10[l].add(traj_prob * leave_one_out),
                        (false, true) => s01[l].add(traj_prob * leave_one_out),
                        _ => {}
                    }
                }
            }
            for (l, &c) in plan.offsets.iter().enumerate() {
                let ctrl = (step - c) as usize;
                let n_term = m_weight * (1.0 - lam0[ctrl]) * s10[l].value();
                let d_term = m_weight * (1.0 - lam1[ctrl]) * s01[l].value();
                push_term(&mut terms, step, c, UPattern::Mask(u_mask as u64), n_term, d_term);
                num.add(n_term);
                den.add(d_term);
            }
        }
    }
    BiasReport::from_ratio(
        spec.beta,
        num.value(),
        den.value(),
        TauMethod::CorrelatedExpansion,
        Some(terms),
    )
}
