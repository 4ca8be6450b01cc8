//! The Mantel-Haenszel case-crossover estimator and the naive pooled cohort
//! hazard ratio.
//!
//! Both estimators reduce to integer tallies whose merge is exact and
//! order-free, so parallel partial counts reproduce the serial result
//! bit for bit. Undefined estimates (zero denominators) are data, not
//! errors: they surface as an unset point so grid sweeps and batch runs can
//! proceed past degenerate cells.

use core::ops::Range;

use crate::dgp::{simulate_subject_into, DgpSpec, SimOptions, SubjectTrajectory};
use crate::sampler::{CaseRecord, SamplingPlan};

/// Discordant-pair tallies for the Mantel-Haenszel ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiscordantCounts {
    /// Case treated, control untreated.
    pub n10: u64,
    /// Case untreated, control treated.
    pub n01: u64,
    /// All case/control pairs, concordant included.
    pub n_pairs: u64,
}

impl DiscordantCounts {
    #[inline]
    pub fn add_pair(&mut self, a_case: bool, a_control: bool) {
        self.n_pairs += 1;
        match (a_case, a_control) {
            (true, false) => self.n10 += 1,
            (false, true) => self.n01 += 1,
            _ => {}
        }
    }

    pub fn add_record(&mut self, record: &CaseRecord) {
        for &a_ctrl in &record.a_controls {
            self.add_pair(record.a_case, a_ctrl);
        }
    }

    pub fn merge(&mut self, other: &DiscordantCounts) {
        self.n10 += other.n10;
        self.n01 += other.n01;
        self.n_pairs += other.n_pairs;
    }

    /// Defined whenever the (0,1) tally is positive.
    pub fn point(&self) -> Option<f64> {
        (self.n01 > 0).then(|| self.n10 as f64 / self.n01 as f64)
    }
}

/// A ratio estimate with its tallies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhEstimate {
    /// `None` when the denominator tally is zero.
    pub point: Option<f64>,
    pub counts: DiscordantCounts,
}

impl MhEstimate {
    pub fn defined(&self) -> bool {
        self.point.is_some()
    }
}

/// Mantel-Haenszel incidence rate ratio over discordant pairs:
/// `#{case treated, control untreated} / #{case untreated, control treated}`,
/// pooling all control times of all records.
pub fn mh_irr(records: &[CaseRecord]) -> MhEstimate {
    let mut counts = DiscordantCounts::default();
    for r in records {
        counts.add_record(r);
    }
    MhEstimate { point: counts.point(), counts }
}

/// Person-time tallies for the naive pooled cohort hazard ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PersonTimeCounts {
    pub treated_steps: u64,
    pub untreated_steps: u64,
    pub treated_events: u64,
    pub untreated_events: u64,
}

impl PersonTimeCounts {
    /// Tally every at-risk person-step of one trajectory.
    pub fn add_subject(&mut self, traj: &SubjectTrajectory) {
        let end = traj.end_step();
        let treated = traj.drawn_treated_before(end + 1);
        self.treated_steps += treated;
        self.untreated_steps += (end as u64 + 1) - treated;
        if traj.outcome_step().is_some() {
            if traj.treatment_at(end) {
                self.treated_events += 1;
            } else {
                self.untreated_events += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &PersonTimeCounts) {
        self.treated_steps += other.treated_steps;
        self.untreated_steps += other.untreated_steps;
        self.treated_events += other.treated_events;
        self.untreated_events += other.untreated_events;
    }

    /// Ratio of pooled per-step event rates; defined only when both arms
    /// have person-time and events.
    pub fn point(&self) -> Option<f64> {
        if self.treated_steps == 0
            || self.untreated_steps == 0
            || self.treated_events == 0
            || self.untreated_events == 0
        {
            return None;
        }
        let treated_rate = self.treated_events as f64 / self.treated_steps as f64;
        let untreated_rate = self.untreated_events as f64 / self.untreated_steps as f64;
        Some(treated_rate / untreated_rate)
    }
}

/// A naive cohort hazard-ratio estimate with its tallies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortHrEstimate {
    pub point: Option<f64>,
    pub counts: PersonTimeCounts,
}

impl CohortHrEstimate {
    pub fn defined(&self) -> bool {
        self.point.is_some()
    }
}

/// Pooled per-step event rate under treatment over the rate untreated,
/// across all at-risk person-steps, with no adjustment for anything.
pub fn naive_cohort_hr(cohort: &[SubjectTrajectory]) -> CohortHrEstimate {
    let mut counts = PersonTimeCounts::default();
    for t in cohort {
        counts.add_subject(t);
    }
    CohortHrEstimate { point: counts.point(), counts }
}

/// Simulate a subject id range and tally its sampled case/control pairs,
/// without materializing the cohort.
///
/// Equivalent to simulating, extracting case records, and counting; one
/// trajectory buffer is reused across subjects. `spec` and `plan` must be
/// validated. Partial tallies over disjoint ranges merge to the full-range
/// result exactly.
pub fn accumulate_discordant(
    spec: &DgpSpec,
    plan: &SamplingPlan,
    master_seed: u64,
    subjects: Range<u64>,
    counts: &mut DiscordantCounts,
) {
    let mut traj = SubjectTrajectory::scratch();
    for id in subjects {
        simulate_subject_into(spec, master_seed, id, SimOptions::default(), &mut traj);
        if let Some(step) = plan.sampled_case_step(&traj) {
            let a_case = traj.treatment_at(step);
            for &c in &plan.offsets {
                debug_assert_eq!(
                    traj.treatment_at(step - c),
                    traj.drawn_treatment_at(step - c)
                );
                counts.add_pair(a_case, traj.treatment_at(step - c));
            }
        }
    }
}

/// Simulate a subject id range and tally its at-risk person-time.
pub fn accumulate_person_time(
    spec: &DgpSpec,
    master_seed: u64,
    subjects: Range<u64>,
    counts: &mut PersonTimeCounts,
) {
    let mut traj = SubjectTrajectory::scratch();
    for id in subjects {
        simulate_subject_into(spec, master_seed, id, SimOptions::default(), &mut traj);
        counts.add_subject(&traj);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn record(id: u64, a_case: bool, a_controls: Vec<bool>) -> CaseRecord {
        CaseRecord { subject_id: id, case_step: 5, a_case, a_controls }
    }

    #[test]
    fn direct_count_example() {
        // Pairs (1,0), (1,0), (0,1) -> 2/1.
        let records = vec![
            record(0, true, vec![false]),
            record(1, true, vec![false]),
            record(2, false, vec![true]),
        ];
        let est = mh_irr(&records);
        assert_eq!(est.point, Some(2.0));
        assert_eq!(est.counts.n10, 2);
        assert_eq!(est.counts.n01, 1);
        assert_eq!(est.counts.n_pairs, 3);
    }

    #[test]
    fn concordant_pairs_count_toward_neither_sum() {
        let records = vec![
            record(0, true, vec![true, false]),
            record(1, false, vec![false, true]),
        ];
        let est = mh_irr(&records);
        assert_eq!(est.counts.n_pairs, 4);
        assert_eq!((est.counts.n10, est.counts.n01), (1, 1));
        assert_eq!(est.point, Some(1.0));
    }

    #[test]
    fn zero_denominator_is_undefined_not_a_panic() {
        let est = mh_irr(&[record(0, true, vec![false])]);
        assert!(!est.defined());
        assert_eq!(est.counts.n10, 1);
        // And an all-concordant set as well.
        let est = mh_irr(&[record(0, true, vec![true])]);
        assert!(!est.defined());
    }

    #[test]
    fn treatment_swap_inverts_the_point() {
        let records = vec![
            record(0, true, vec![false, false]),
            record(1, true, vec![true, false]),
            record(2, false, vec![true, true]),
            record(3, false, vec![true, false]),
        ];
        let flipped: Vec<CaseRecord> = records
            .iter()
            .map(|r| CaseRecord {
                subject_id: r.subject_id,
                case_step: r.case_step,
                a_case: !r.a_case,
                a_controls: r.a_controls.iter().map(|a| !a).collect(),
            })
            .collect();
        let p = mh_irr(&records).point.unwrap();
        let q = mh_irr(&flipped).point.unwrap();
        assert!((p * q - 1.0).abs() < 1e-15);
    }

    #[test]
    fn merge_matches_sequential() {
        let records: Vec<CaseRecord> = (0..10)
            .map(|i| record(i, i % 3 == 0, vec![i % 2 == 0, i % 5 == 0]))
            .collect();
        let whole = mh_irr(&records).counts;
        let mut left = DiscordantCounts::default();
        let mut right = DiscordantCounts::default();
        for r in &records[..4] {
            left.add_record(r);
        }
        for r in &records[4..] {
            right.add_record(r);
        }
        let mut merged = right;
        merged.merge(&left);
        assert_eq!(merged, whole);
    }
}
