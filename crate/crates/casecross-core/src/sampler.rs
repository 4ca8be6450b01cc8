//! Case person-time sampling and within-subject control selection.
//!
//! A subject whose first event falls at least `lookback` steps after
//! baseline is an eligible case; an eligible case is retained with
//! probability `case_fraction` (one uniform draw from a stream keyed by the
//! plan seed and the subject id, so thinning is reproducible and independent
//! of cohort order). Each retained case contributes its treatment at the
//! event step and at the `m` control steps `event - offsets[l]`.

use alloc::vec::Vec;

use crate::dgp::SubjectTrajectory;
use crate::rng::{self, StreamKind};
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Lookback window, control offsets, and case-sampling fraction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SamplingPlan {
    /// Maximum lookback `W` in steps; a case at step `k` is eligible when
    /// `k >= lookback`, so every control step exists.
    pub lookback: u32,
    /// Control offsets `c_1 < c_2 < ... <= lookback`, in steps before the
    /// case step.
    pub offsets: Vec<u32>,
    /// Fraction of eligible cases retained (`H/H*`), in `(0, 1]`.
    #[cfg_attr(feature = "serde", serde(default = "full_fraction"))]
    pub case_fraction: f64,
    /// Seed of the thinning stream. Irrelevant when `case_fraction == 1`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

#[cfg(feature = "serde")]
fn full_fraction() -> f64 {
    1.0
}

impl SamplingPlan {
    /// Single control `offset` steps back, no subsampling.
    pub fn single_control(offset: u32) -> Self {
        SamplingPlan {
            lookback: offset,
            offsets: alloc::vec![offset],
            case_fraction: 1.0,
            seed: 0,
        }
    }

    /// Number of control times per case.
    pub fn n_controls(&self) -> usize {
        self.offsets.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.offsets.is_empty() {
            return Err(Error::InvalidOffsets);
        }
        let mut prev = 0u32;
        for &c in &self.offsets {
            if c <= prev || c > self.lookback {
                return Err(Error::InvalidOffsets);
            }
            prev = c;
        }
        if !(self.case_fraction.is_finite()
            && self.case_fraction > 0.0
            && self.case_fraction <= 1.0)
        {
            return Err(Error::InvalidCaseFraction { value: self.case_fraction });
        }
        Ok(())
    }

    /// Validate, and additionally require that at least one eligible case
    /// step exists within `horizon` steps.
    pub fn validate_for_horizon(&self, horizon: u32) -> Result<()> {
        self.validate()?;
        if self.lookback >= horizon {
            return Err(Error::LookbackExcludesAllCases {
                lookback: self.lookback,
                horizon,
            });
        }
        Ok(())
    }

    /// Case step and sampling decision for one trajectory: `Some(step)` when
    /// the subject is an eligible, retained case.
    pub fn sampled_case_step(&self, traj: &SubjectTrajectory) -> Option<u32> {
        let step = traj.outcome_step()?;
        if step < self.lookback {
            return None;
        }
        if self.case_fraction < 1.0 {
            let mut rng = rng::stream(self.seed, traj.subject_id, StreamKind::CaseThinning);
            if rng::u01(&mut rng) >= self.case_fraction {
                return None;
            }
        }
        Some(step)
    }
}

/// The data a retained case contributes: treatment at the event step and at
/// each control step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseRecord {
    pub subject_id: u64,
    pub case_step: u32,
    pub a_case: bool,
    pub a_controls: Vec<bool>,
}

/// Extract the case record of a single trajectory, if it is an eligible,
/// retained case.
pub fn extract_case(traj: &SubjectTrajectory, plan: &SamplingPlan) -> Option<CaseRecord> {
    let case_step = plan.sampled_case_step(traj)?;
    let a_case = traj.treatment_at(case_step);
    let a_controls = plan
        .offsets
        .iter()
        .map(|&c| {
            let ctrl = case_step - c;
            let a = traj.treatment_at(ctrl);
            // Controls precede the event, so event-censoring can never have
            // zeroed them.
            assert_eq!(a, traj.drawn_treatment_at(ctrl));
            a
        })
        .collect();
    Some(CaseRecord { subject_id: traj.subject_id, case_step, a_case, a_controls })
}

/// Extract all case records from a cohort.
///
/// With `case_fraction = 1` this is a pure function of the cohort; zero
/// eligible cases yields an empty result, which is data rather than an
/// error.
pub fn extract_cases(
    cohort: &[SubjectTrajectory],
    plan: &SamplingPlan,
) -> Result<Vec<CaseRecord>> {
    match cohort.first() {
        Some(t) => plan.validate_for_horizon(t.horizon())?,
        None => plan.validate()?,
    }
    Ok(cohort.iter().filter_map(|t| extract_case(t, plan)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{simulate_cohort, DgpSpec, HazardTable, SimOptions, SmallOracle};

    fn high_risk_spec() -> DgpSpec {
        DgpSpec::SmallOracle(SmallOracle::iid(6, 0.5, 0.5, HazardTable::flat(6, 0.3), 1.5))
    }

    #[test]
    fn offsets_must_increase_within_lookback() {
        let bad = SamplingPlan { lookback: 2, offsets: alloc::vec![2, 1], ..SamplingPlan::single_control(1) };
        assert!(matches!(bad.validate(), Err(Error::InvalidOffsets)));
        let too_far = SamplingPlan { lookback: 2, offsets: alloc::vec![3], ..SamplingPlan::single_control(1) };
        assert!(matches!(too_far.validate(), Err(Error::InvalidOffsets)));
    }

    #[test]
    fn lookback_covering_horizon_is_rejected() {
        let plan = SamplingPlan::single_control(6);
        let cohort = simulate_cohort(&high_risk_spec(), 10, 1, SimOptions::default()).unwrap();
        assert!(matches!(
            extract_cases(&cohort, &plan),
            Err(Error::LookbackExcludesAllCases { lookback: 6, horizon: 6 })
        ));
    }

    #[test]
    fn early_cases_are_ineligible() {
        let cohort = simulate_cohort(&high_risk_spec(), 2_000, 7, SimOptions::default()).unwrap();
        let plan = SamplingPlan { lookback: 5, offsets: alloc::vec![1, 5], case_fraction: 1.0, seed: 0 };
        let records = extract_cases(&cohort, &plan).unwrap();
        // Only step-5 events qualify under lookback 5 on a 6-step horizon.
        assert!(records.iter().all(|r| r.case_step == 5));
        let n_step5 = cohort.iter().filter(|t| t.outcome_step() == Some(5)).count();
        assert_eq!(records.len(), n_step5);
        assert!(!records.is_empty());
    }

    #[test]
    fn all_early_cases_yield_empty_result() {
        // Certain failure within the first two steps; lookback 5 makes every
        // case ineligible, which is an empty result rather than an error.
        let spec = DgpSpec::SmallOracle(SmallOracle::iid(
            6,
            0.0,
            0.5,
            HazardTable::from_fn(6, |q, _, _| if q < 2 { 0.9 } else { 0.0 }),
            1.0,
        ));
        let cohort = simulate_cohort(&spec, 1_000, 2, SimOptions::default()).unwrap();
        assert!(cohort.iter().any(|t| t.is_case()));
        let records = extract_cases(&cohort, &SamplingPlan::single_control(5)).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn full_fraction_is_pure_and_order_invariant() {
        let cohort = simulate_cohort(&high_risk_spec(), 500, 3, SimOptions::default()).unwrap();
        let plan = SamplingPlan::single_control(2);
        let a = extract_cases(&cohort, &plan).unwrap();
        let b = extract_cases(&cohort, &plan).unwrap();
        assert_eq!(a, b);
        let mut reversed: Vec<_> = cohort.clone();
        reversed.reverse();
        let mut c = extract_cases(&reversed, &plan).unwrap();
        c.sort_by_key(|r| r.subject_id);
        assert_eq!(a, c);
    }

    #[test]
    fn thinning_is_deterministic_and_binomial() {
        let cohort = simulate_cohort(&high_risk_spec(), 20_000, 11, SimOptions::default()).unwrap();
        let full = extract_cases(&cohort, &SamplingPlan::single_control(1)).unwrap();
        let plan = SamplingPlan { case_fraction: 0.3, seed: 99, ..SamplingPlan::single_control(1) };
        let thinned = extract_cases(&cohort, &plan).unwrap();
        let again = extract_cases(&cohort, &plan).unwrap();
        assert_eq!(thinned, again);
        // 4-sigma binomial band around fraction * eligible.
        let n = full.len() as f64;
        let got = thinned.len() as f64;
        let sd = (n * 0.3 * 0.7).sqrt();
        assert!((got - 0.3 * n).abs() < 4.0 * sd, "retained {got} of {n}");
        // Thinned records are a subset of the full extraction.
        let full_ids: alloc::collections::BTreeSet<u64> =
            full.iter().map(|r| r.subject_id).collect();
        assert!(thinned.iter().all(|r| full_ids.contains(&r.subject_id)));
    }
}
