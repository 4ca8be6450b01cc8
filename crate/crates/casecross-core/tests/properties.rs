//! Property tests over generated record sets and plans.

use casecross_core::estimators::{mh_irr, DiscordantCounts};
use casecross_core::sampler::{CaseRecord, SamplingPlan};
use casecross_core::BitSeq;
use proptest::prelude::*;

fn arb_records(max_controls: usize) -> impl Strategy<Value = Vec<CaseRecord>> {
    (1..=max_controls).prop_flat_map(|m| {
        prop::collection::vec(
            (any::<bool>(), prop::collection::vec(any::<bool>(), m)),
            0..200,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (a_case, a_controls))| CaseRecord {
                    subject_id: i as u64,
                    case_step: 10,
                    a_case,
                    a_controls,
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn mh_is_invariant_to_record_order_and_ids(mut records in arb_records(3)) {
        let base = mh_irr(&records);
        records.reverse();
        for (i, r) in records.iter_mut().enumerate() {
            r.subject_id = 1_000 + i as u64;
        }
        let permuted = mh_irr(&records);
        prop_assert_eq!(base.counts, permuted.counts);
        prop_assert_eq!(base.point, permuted.point);
    }

    #[test]
    fn mh_swap_of_every_treatment_inverts_the_point(records in arb_records(3)) {
        let flipped: Vec<CaseRecord> = records
            .iter()
            .map(|r| CaseRecord {
                subject_id: r.subject_id,
                case_step: r.case_step,
                a_case: !r.a_case,
                a_controls: r.a_controls.iter().map(|a| !a).collect(),
            })
            .collect();
        let p = mh_irr(&records);
        let q = mh_irr(&flipped);
        prop_assert_eq!(p.counts.n10, q.counts.n01);
        prop_assert_eq!(p.counts.n01, q.counts.n10);
        if let (Some(a), Some(b)) = (p.point, q.point) {
            if a > 0.0 {
                prop_assert!((a * b - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_counts_merge_exactly(records in arb_records(2), split in 0usize..200) {
        let whole = mh_irr(&records).counts;
        let split = split.min(records.len());
        let mut left = DiscordantCounts::default();
        let mut right = DiscordantCounts::default();
        for r in &records[..split] { left.add_record(r); }
        for r in &records[split..] { right.add_record(r); }
        left.merge(&right);
        prop_assert_eq!(left, whole);
    }

    #[test]
    fn plan_validation_accepts_exactly_wellformed_offsets(
        lookback in 1u32..12,
        offsets in prop::collection::vec(1u32..15, 1..5),
    ) {
        let plan = SamplingPlan { lookback, offsets: offsets.clone(), case_fraction: 1.0, seed: 0 };
        let strictly_increasing = offsets.windows(2).all(|w| w[0] < w[1]);
        let within = offsets.iter().all(|&c| c >= 1 && c <= lookback);
        prop_assert_eq!(plan.validate().is_ok(), strictly_increasing && within);
    }

    #[test]
    fn blocked_bitseq_matches_per_step_reference(
        len in 1u32..120,
        block in 1u32..10,
        sets in prop::collection::vec(0u32..120, 0..20),
        upto in 0u32..130,
    ) {
        let mut seq = BitSeq::zeros(len, block);
        let mut reference = vec![false; len as usize];
        for s in sets {
            if s < len {
                seq.set_step(s);
                // A set propagates to the whole block.
                let head = s - s % block;
                for q in head..(head + block).min(len) {
                    reference[q as usize] = true;
                }
            }
        }
        for q in 0..len {
            prop_assert_eq!(seq.get(q), reference[q as usize]);
        }
        let upto = upto.min(len);
        let want = reference[..upto as usize].iter().filter(|&&b| b).count() as u64;
        prop_assert_eq!(seq.count_ones_before(upto), want);
    }
}
