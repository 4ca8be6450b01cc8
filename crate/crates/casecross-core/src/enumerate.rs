//! Exhaustive enumeration over small-oracle processes.
//!
//! For a [`SmallOracle`] the joint law of `(U, A, first event time)` is a
//! finite sum over `2^(u_blocks) * 2^(a_blocks)` draw configurations. One
//! walk over every configuration yields, exactly:
//!
//! - the first-event probability mass function over steps,
//! - the joint probability of being an eligible case at step `k` with
//!   treatment `a` at the case time and `a'` at each control time, whose
//!   discordant-cell ratio is the probability limit of the Mantel-Haenszel
//!   estimator, and
//! - the same discordant masses weighted by the *untreated* hazard at the
//!   case time, which is the numerator/denominator pair of the estimator's
//!   multiplicative bias factor.
//!
//! Survival products are accumulated in log space once the horizon exceeds
//! 8 steps; below that, plain products are exact enough and faster.

use alloc::vec;
use alloc::vec::Vec;

use crate::dgp::SmallOracle;
use crate::sampler::SamplingPlan;
use crate::{Error, Result, Sum2};

/// Default cap on enumerated joint configurations.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 26;

/// Horizon above which survival products move to log space.
const LOG_SPACE_HORIZON: u32 = 8;

/// Exact joint case/control-treatment probabilities for a small oracle.
#[derive(Debug, Clone)]
pub struct CaseCellTable {
    horizon: u32,
    lookback: u32,
    offsets: Vec<u32>,
    /// `[(step * m + offset_index)][(a_case << 1) | a_control]`; zero for
    /// ineligible steps.
    cells: Vec<[f64; 4]>,
    /// First-event probability by step (all steps, not just eligible ones).
    pub case_step_pmf: Vec<f64>,
    tau_num: f64,
    tau_den: f64,
}

/// One cell of the joint table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseCell {
    pub case_step: u32,
    pub offset: u32,
    pub a_case: bool,
    pub a_control: bool,
    pub probability: f64,
}

impl CaseCellTable {
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn lookback(&self) -> u32 {
        self.lookback
    }

    pub fn offsets(&self) -> &[u32] {
        &self.offsets
    }

    /// Pr(first event at `case_step`, treated `a_case` then, treated
    /// `a_control` at `case_step - offsets[offset_index]`).
    pub fn cell(&self, case_step: u32, offset_index: usize, a_case: bool, a_control: bool) -> f64 {
        let m = self.offsets.len();
        self.cells[case_step as usize * m + offset_index][((a_case as usize) << 1) | a_control as usize]
    }

    /// Total eligible-case mass for one control offset; identical for every
    /// offset and equal to [`Self::p_eligible_case`] up to rounding.
    pub fn total_for_offset(&self, offset_index: usize) -> f64 {
        let mut s = Sum2::new();
        for step in self.lookback..self.horizon {
            for cell in self.cells[step as usize * self.offsets.len() + offset_index] {
                s.add(cell);
            }
        }
        s.value()
    }

    /// Pr(first event at an eligible step), from the event pmf.
    pub fn p_eligible_case(&self) -> f64 {
        let mut s = Sum2::new();
        for step in self.lookback..self.horizon {
            s.add(self.case_step_pmf[step as usize]);
        }
        s.value()
    }

    /// Discordant-cell masses summed over case steps and offsets:
    /// `(Pr(1,0), Pr(0,1))`.
    pub fn discordant_mass(&self) -> (f64, f64) {
        let (mut n10, mut n01) = (Sum2::new(), Sum2::new());
        for step in self.lookback..self.horizon {
            for l in 0..self.offsets.len() {
                n10.add(self.cell(step, l, true, false));
                n01.add(self.cell(step, l, false, true));
            }
        }
        (n10.value(), n01.value())
    }

    /// Probability limit of the Mantel-Haenszel estimator: the ratio of
    /// discordant masses. `None` when the (0,1) mass is zero.
    pub fn mh_limit(&self) -> Option<f64> {
        let (n10, n01) = self.discordant_mass();
        (n01 > 0.0).then(|| n10 / n01)
    }

    /// Numerator and denominator of the multiplicative bias factor: the
    /// discordant masses weighted by the untreated case-time hazard.
    pub fn tau_components(&self) -> (f64, f64) {
        (self.tau_num, self.tau_den)
    }

    /// Iterate eligible cells in deterministic (step, offset, a, a') order.
    pub fn iter_cells(&self) -> impl Iterator<Item = CaseCell> + '_ {
        (self.lookback..self.horizon).flat_map(move |step| {
            (0..self.offsets.len()).flat_map(move |l| {
                [(true, false), (false, true), (true, true), (false, false)].into_iter().map(
                    move |(a_case, a_control)| CaseCell {
                        case_step: step,
                        offset: self.offsets[l],
                        a_case,
                        a_control,
                        probability: self.cell(step, l, a_case, a_control),
                    },
                )
            })
        })
    }
}

/// Per-configuration expansion of a small oracle shared by the walkers.
pub(crate) struct OracleLayout {
    pub n_u_blocks: u32,
    pub n_a_blocks: u32,
    pub u_block: u32,
    pub a_block: u32,
    /// Bernoulli parameter of each a-block head.
    pub a_head_p: Vec<f64>,
}

impl OracleLayout {
    pub fn new(spec: &SmallOracle) -> Self {
        let n_u_blocks = spec.horizon.div_ceil(spec.u_block);
        let n_a_blocks = spec.horizon.div_ceil(spec.a_block);
        let a_head_p =
            (0..n_a_blocks).map(|b| spec.p_a[(b * spec.a_block) as usize]).collect();
        OracleLayout {
            n_u_blocks,
            n_a_blocks,
            u_block: spec.u_block,
            a_block: spec.a_block,
            a_head_p,
        }
    }

    pub fn required_configs(&self) -> u64 {
        1u64 << (self.n_u_blocks + self.n_a_blocks)
    }

    #[inline]
    pub fn u_at(&self, mask: u32, step: u32) -> bool {
        mask >> (step / self.u_block) & 1 == 1
    }

    #[inline]
    pub fn a_at(&self, mask: u32, step: u32) -> bool {
        mask >> (step / self.a_block) & 1 == 1
    }

    pub fn u_mask_prob(&self, p_u: f64, mask: u32) -> f64 {
        let mut p = 1.0;
        for b in 0..self.n_u_blocks {
            p *= if mask >> b & 1 == 1 { p_u } else { 1.0 - p_u };
        }
        p
    }

    pub fn a_mask_prob(&self, mask: u32) -> f64 {
        let mut p = 1.0;
        for (b, &head) in self.a_head_p.iter().enumerate() {
            p *= if mask >> b & 1 == 1 { head } else { 1.0 - head };
        }
        p
    }
}

fn check_budget(layout: &OracleLayout, budget: u64) -> Result<()> {
    let required = layout.required_configs();
    if required > budget {
        return Err(Error::EnumerationBudget { required, budget });
    }
    Ok(())
}

/// Exact table of `Pr(case at k, A_case = a, A_control_l = a')` for every
/// eligible case step, control offset, and treatment pair, by summation over
/// all joint draw configurations.
///
/// The sampling fraction plays no role here: subsampling eligible cases
/// rescales every cell identically.
pub fn enumerate_case_probabilities(
    spec: &SmallOracle,
    plan: &SamplingPlan,
) -> Result<CaseCellTable> {
    enumerate_case_probabilities_with_budget(spec, plan, DEFAULT_ENUMERATION_BUDGET)
}

/// As [`enumerate_case_probabilities`], with an explicit configuration
/// budget; exceeding it is refused with the required count.
pub fn enumerate_case_probabilities_with_budget(
    spec: &SmallOracle,
    plan: &SamplingPlan,
    budget: u64,
) -> Result<CaseCellTable> {
    spec.validate()?;
    plan.validate_for_horizon(spec.horizon)?;
    let layout = OracleLayout::new(spec);
    check_budget(&layout, budget)?;

    let t = spec.horizon as usize;
    let m = plan.offsets.len();
    let w = plan.lookback;
    let log_space = spec.horizon > LOG_SPACE_HORIZON;

    let mut cells = vec![[Sum2::new(); 4]; t * m];
    let mut pmf = vec![Sum2::new(); t];
    let mut tau_num = Sum2::new();
    let mut tau_den = Sum2::new();

    // Per-u-mask step hazards, reused across the inner a-mask loop.
    let mut lam0 = vec![0.0f64; t];
    let mut lam1 = vec![0.0f64; t];
    let mut log1m_lam0 = vec![0.0f64; t];
    let mut log1m_lam1 = vec![0.0f64; t];

    for u_mask in 0u32..1 << layout.n_u_blocks {
        let p_u_mask = layout.u_mask_prob(spec.p_u, u_mask);
        if p_u_mask == 0.0 {
            continue;
        }
        for step in 0..spec.horizon {
            let u_now = layout.u_at(u_mask, step);
            let u_lag = step > 0 && layout.u_at(u_mask, step - 1);
            let l0 = spec.hazard0.rate(step, u_now, u_lag);
            lam0[step as usize] = l0;
            lam1[step as usize] = spec.beta * l0;
            if log_space {
                log1m_lam0[step as usize] = libm::log1p(-l0);
                log1m_lam1[step as usize] = libm::log1p(-(spec.beta * l0));
            }
        }
        for a_mask in 0u32..1 << layout.n_a_blocks {
            let p_mask = p_u_mask * layout.a_mask_prob(a_mask);
            if p_mask == 0.0 {
                continue;
            }
            // Walk the steps once, accumulating survival and emitting the
            // first-event contribution at each step.
            let mut surv = 1.0f64;
            let mut log_surv = 0.0f64;
            for step in 0..spec.horizon {
                let a = layout.a_at(a_mask, step);
                let q = step as usize;
                let (lam, log1m) =
                    if a { (lam1[q], log1m_lam1[q]) } else { (lam0[q], log1m_lam0[q]) };
                let survival = if log_space { libm::exp(log_surv) } else { surv };
                let at_risk_mass = p_mask * survival;
                if at_risk_mass > 0.0 {
                    let p_case_here = at_risk_mass * lam;
                    pmf[q].add(p_case_here);
                    if step >= w {
                        let bias_weight = at_risk_mass * lam0[q];
                        for (l, &c) in plan.offsets.iter().enumerate() {
                            let a_ctrl = layout.a_at(a_mask, step - c);
                            cells[q * m + l][((a as usize) << 1) | a_ctrl as usize]
                                .add(p_case_here);
                            match (a, a_ctrl) {
                                (true, false) => tau_num.add(bias_weight),
                                (false, true) => tau_den.add(bias_weight),
                                _ => {}
                            }
                        }
                    }
                }
                if log_space {
                    log_surv += log1m;
                } else {
                    surv *= 1.0 - lam;
                }
            }
        }
    }

    Ok(CaseCellTable {
        horizon: spec.horizon,
        lookback: w,
        offsets: plan.offsets.clone(),
        cells: cells.into_iter().map(|c| c.map(|s| s.value())).collect(),
        case_step_pmf: pmf.into_iter().map(|s| s.value()).collect(),
        tau_num: tau_num.value(),
        tau_den: tau_den.value(),
    })
}

/// Numerator and denominator of the randomized-trial relative risk at
/// `step`: survivor-mass-weighted treated and untreated hazards.
pub(crate) fn rct_components(spec: &SmallOracle, step: u32) -> Result<(f64, f64)> {
    let layout = OracleLayout::new(spec);
    check_budget(&layout, DEFAULT_ENUMERATION_BUDGET)?;
    let mut num = Sum2::new();
    let mut den = Sum2::new();
    // Blocks beyond `step` are marginalized away by only enumerating masks
    // of the covering blocks.
    let u_blocks = step / spec.u_block + 1;
    let a_blocks = step / spec.a_block + 1;
    for u_mask in 0u32..1 << u_blocks {
        let mut p_u_mask = 1.0;
        for b in 0..u_blocks {
            p_u_mask *= if u_mask >> b & 1 == 1 { spec.p_u } else { 1.0 - spec.p_u };
        }
        if p_u_mask == 0.0 {
            continue;
        }
        for a_mask in 0u32..1 << a_blocks {
            let mut p_mask = p_u_mask;
            for b in 0..a_blocks {
                let head = spec.p_a[(b * spec.a_block) as usize];
                p_mask *= if a_mask >> b & 1 == 1 { head } else { 1.0 - head };
            }
            if p_mask == 0.0 {
                continue;
            }
            let mut surv = 1.0f64;
            for s in 0..step {
                let u_now = layout.u_at(u_mask, s);
                let u_lag = s > 0 && layout.u_at(u_mask, s - 1);
                let l0 = spec.hazard0.rate(s, u_now, u_lag);
                let lam = if layout.a_at(a_mask, s) { spec.beta * l0 } else { l0 };
                surv *= 1.0 - lam;
            }
            let u_now = layout.u_at(u_mask, step);
            let u_lag = step > 0 && layout.u_at(u_mask, step - 1);
            let l0 = spec.hazard0.rate(step, u_now, u_lag);
            num.add(p_mask * surv * (spec.beta * l0));
            den.add(p_mask * surv * l0);
        }
    }
    Ok((num.value(), den.value()))
}

/// Worst-case cumulative event risk over all `(U, A)` configurations:
/// `max 1 - prod_t (1 - lambda^a_t)`.
pub(crate) fn max_cumulative_risk(spec: &SmallOracle) -> f64 {
    let layout = OracleLayout::new(spec);
    let mut min_survival = 1.0f64;
    for u_mask in 0u32..1 << layout.n_u_blocks {
        let mut surv = 1.0f64;
        for step in 0..spec.horizon {
            let u_now = layout.u_at(u_mask, step);
            let u_lag = step > 0 && layout.u_at(u_mask, step - 1);
            let l0 = spec.hazard0.rate(step, u_now, u_lag);
            // The per-step worst arm is whichever hazard is larger.
            let worst = if spec.beta >= 1.0 { spec.beta * l0 } else { l0 };
            surv *= 1.0 - worst;
        }
        if surv < min_survival {
            min_survival = surv;
        }
    }
    1.0 - min_survival
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::HazardTable;

    fn tiny() -> SmallOracle {
        // Two steps, no U, flat hazard .1, beta 2, fair coin treatments.
        SmallOracle::iid(2, 0.0, 0.5, HazardTable::flat(2, 0.1), 2.0)
    }

    fn plan11() -> SamplingPlan {
        SamplingPlan { lookback: 1, offsets: alloc::vec![1], case_fraction: 1.0, seed: 0 }
    }

    #[test]
    fn hand_computed_two_step_cells() {
        // Case must fall at step 1. With lam0 = .1, lam1 = .2 and p_a = 1/2:
        //   Pr(case, 1, 0) = 1/4 * (1 - .1) * .2 = .045
        //   Pr(case, 0, 1) = 1/4 * (1 - .2) * .1 = .020
        //   Pr(case, 1, 1) = 1/4 * (1 - .2) * .2 = .040
        //   Pr(case, 0, 0) = 1/4 * (1 - .1) * .1 = .0225
        let table = enumerate_case_probabilities(&tiny(), &plan11()).unwrap();
        assert!((table.cell(1, 0, true, false) - 0.045).abs() < 1e-15);
        assert!((table.cell(1, 0, false, true) - 0.020).abs() < 1e-15);
        assert!((table.cell(1, 0, true, true) - 0.040).abs() < 1e-15);
        assert!((table.cell(1, 0, false, false) - 0.0225).abs() < 1e-15);
        assert!((table.mh_limit().unwrap() - 2.25).abs() < 1e-12);
        let (num, den) = table.tau_components();
        assert!((num / den - 1.125).abs() < 1e-12);
        // Cell mass equals eligible-case probability.
        assert!((table.total_for_offset(0) - table.p_eligible_case()).abs() < 1e-14);
        assert!((table.p_eligible_case() - 0.1275).abs() < 1e-15);
        // Event pmf: step 0 mixes arms: .5*.1 + .5*.2 = .15.
        assert!((table.case_step_pmf[0] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn zero_hazard_gives_empty_table() {
        let spec = SmallOracle::iid(3, 0.5, 0.5, HazardTable::flat(3, 0.0), 1.0);
        let table = enumerate_case_probabilities(&spec, &plan11()).unwrap();
        assert_eq!(table.p_eligible_case(), 0.0);
        assert!(table.iter_cells().all(|c| c.probability == 0.0));
        assert!(table.mh_limit().is_none());
    }

    #[test]
    fn budget_refusal_names_required_size() {
        let spec = SmallOracle::iid(10, 0.1, 0.5, HazardTable::flat(10, 0.05), 1.5);
        let err = enumerate_case_probabilities_with_budget(&spec, &plan11(), 1 << 10)
            .unwrap_err();
        match err {
            Error::EnumerationBudget { required, budget } => {
                assert_eq!(required, 1 << 20);
                assert_eq!(budget, 1 << 10);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn null_effect_symmetric_discordance() {
        // beta = 1 with exchangeable iid treatments: Pr(1,0) = Pr(0,1)
        // cell-by-cell.
        let spec = SmallOracle::iid(4, 0.3, 0.4, HazardTable::flat(4, 0.12), 1.0);
        let plan = SamplingPlan {
            lookback: 2,
            offsets: alloc::vec![1, 2],
            case_fraction: 1.0,
            seed: 0,
        };
        let table = enumerate_case_probabilities(&spec, &plan).unwrap();
        for step in 2..4 {
            for l in 0..2 {
                let p10 = table.cell(step, l, true, false);
                let p01 = table.cell(step, l, false, true);
                assert!((p10 - p01).abs() < 1e-15, "step {step} offset {l}");
            }
        }
    }
}
