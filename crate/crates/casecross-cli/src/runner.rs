//! Parallel drivers over subject-id ranges.
//!
//! Work is split into fixed id chunks; each chunk produces an integer tally
//! whose merge is exact, so results are identical for any thread count,
//! including one.

use anyhow::Result;
use rayon::prelude::*;

use casecross_core::dgp::{
    accumulate_rct, simulate_subject, DgpSpec, RctCounts, SimOptions, SubjectTrajectory,
};
use casecross_core::estimators::{
    accumulate_discordant, accumulate_person_time, DiscordantCounts, PersonTimeCounts,
};
use casecross_core::sampler::SamplingPlan;

/// Subjects per work item.
const CHUNK: u64 = 1 << 14;

/// Run `f` on a dedicated pool of `threads` workers, or on the global pool
/// when unset.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?;
            Ok(pool.install(f))
        }
    }
}

fn chunks_of(n_subjects: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    let n_chunks = n_subjects.div_ceil(CHUNK);
    (0..n_chunks).into_par_iter().map(move |c| (c * CHUNK, ((c + 1) * CHUNK).min(n_subjects)))
}

/// Materialize a cohort in subject order.
pub fn simulate_cohort_parallel(
    spec: &DgpSpec,
    n_subjects: u64,
    master_seed: u64,
    opts: SimOptions,
) -> Vec<SubjectTrajectory> {
    (0..n_subjects)
        .into_par_iter()
        .map(|id| simulate_subject(spec, master_seed, id, opts))
        .collect()
}

/// Discordant-pair tallies of one simulated run.
pub fn mh_counts(
    spec: &DgpSpec,
    plan: &SamplingPlan,
    n_subjects: u64,
    master_seed: u64,
) -> DiscordantCounts {
    chunks_of(n_subjects)
        .map(|(lo, hi)| {
            let mut counts = DiscordantCounts::default();
            accumulate_discordant(spec, plan, master_seed, lo..hi, &mut counts);
            counts
        })
        .reduce(DiscordantCounts::default, |mut a, b| {
            a.merge(&b);
            a
        })
}

/// Discordant-pair tallies pooled over consecutive master seeds
/// `master_seed..master_seed + seeds`.
pub fn mh_counts_pooled(
    spec: &DgpSpec,
    plan: &SamplingPlan,
    n_subjects: u64,
    master_seed: u64,
    seeds: u32,
) -> DiscordantCounts {
    (0..seeds as u64)
        .into_par_iter()
        .map(|offset| mh_counts(spec, plan, n_subjects, master_seed + offset))
        .reduce(DiscordantCounts::default, |mut a, b| {
            a.merge(&b);
            a
        })
}

/// Person-time tallies of one simulated run.
pub fn person_time_counts(spec: &DgpSpec, n_subjects: u64, master_seed: u64) -> PersonTimeCounts {
    chunks_of(n_subjects)
        .map(|(lo, hi)| {
            let mut counts = PersonTimeCounts::default();
            accumulate_person_time(spec, master_seed, lo..hi, &mut counts);
            counts
        })
        .reduce(PersonTimeCounts::default, |mut a, b| {
            a.merge(&b);
            a
        })
}

/// Randomized-trial tallies at `step` of one simulated run.
pub fn rct_counts(spec: &DgpSpec, step: u32, n_subjects: u64, master_seed: u64) -> RctCounts {
    chunks_of(n_subjects)
        .map(|(lo, hi)| {
            let mut counts = RctCounts::default();
            accumulate_rct(spec, step, master_seed, lo..hi, &mut counts);
            counts
        })
        .reduce(RctCounts::default, |mut a, b| {
            a.merge(&b);
            a
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use casecross_core::estimators::mh_irr;
    use casecross_core::sampler::extract_cases;

    #[test]
    fn parallel_counts_equal_serial_pipeline() {
        let spec = DgpSpec::CoarseIndependent(casecross_core::dgp::CoarseIndependent {
            horizon: 24,
            p_u: 0.001,
            w_lag: 0.45,
            w_now: 0.45,
            hazard_cap: 0.5,
            beta: 2.0,
            p_a: 0.5,
        });
        let plan = SamplingPlan::single_control(1);
        let n = 40_000;
        let cohort =
            casecross_core::dgp::simulate_cohort(&spec, n, 1, SimOptions::default()).unwrap();
        let serial = mh_irr(&extract_cases(&cohort, &plan).unwrap()).counts;
        for threads in [1, 3] {
            let parallel =
                with_threads(Some(threads), || mh_counts(&spec, &plan, n, 1)).unwrap();
            assert_eq!(parallel, serial);
        }
    }
}
