mod common;

use fairdiv_core::allocator::{
    check_bundle_monotonicity, check_tree_probabilities, deterministic_envy_cycles, fair_envy_cycles_enumerate,
    fair_envy_cycles_sample, rsd_enumerate, weakly_separated_matching,
};
use fairdiv_core::eating::one_step_ps;
use fairdiv_core::fairness::{check_weak_separation, expost_report, min_ef1_ratio, min_efx_ratio};
use fairdiv_core::io;
use fairdiv_core::twoagents::{balanced_partition, efx_partition, two_agent_lottery, LotteryTarget};
use fairdiv_core::{pad_with_dummies, Allocation, ItemSet, Rational, ValuationClass};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn shape() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 2usize..=4).prop_flat_map(|(seed, n)| (Just(seed), Just(n), (n + 1)..=7))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn padding_keeps_values((seed, n, m) in shape(), extra in 1usize..3, mask in 0u64..128) {
        let inst = common::random_instance(seed, n, m);
        let padded = inst.with_dummy_items(extra);
        let s = ItemSet::from_mask(mask & ((1 << m) - 1));
        for i in 0..n {
            prop_assert_eq!(inst.value(i, &s), padded.value(i, &s));
            prop_assert_eq!(padded.value(i, &s.with(m)), inst.value(i, &s));
        }
    }

    #[test]
    fn eating_fills_rows((seed, n, m) in shape()) {
        let inst = common::random_instance(seed, n, m);
        let (z, _) = one_step_ps(&inst).unwrap();
        for i in 0..n {
            prop_assert!(z.row_sum(i).is_one());
        }
        for g in 0..m {
            prop_assert!(z.column_sum(g) <= Rational::one());
        }
    }

    #[test]
    fn execution_tree_invariants((seed, n, m) in shape()) {
        let inst = common::random_instance(seed, n, m);
        let (dist, tree) = fair_envy_cycles_enumerate(&inst, 100_000).unwrap();
        prop_assert!(check_tree_probabilities(&tree).is_none());
        prop_assert!(check_bundle_monotonicity(&inst, &tree).is_none());
        prop_assert!(dist.is_complete());
        let r = expost_report(&inst, &dist).unwrap();
        prop_assert!(r.meets_half_guarantees(), "{:?}", r);
    }

    #[test]
    fn sampled_runs_land_on_leaves((seed, n, m) in shape(), run in any::<u64>()) {
        let inst = common::random_instance(seed, n, m);
        let (dist, _) = fair_envy_cycles_enumerate(&inst, 100_000).unwrap();
        let (a, _) = fair_envy_cycles_sample(&inst, run).unwrap();
        prop_assert!(dist.probability_of(&a) > Rational::zero());
        prop_assert_eq!(fair_envy_cycles_sample(&inst, run).unwrap().0, a);
    }

    #[test]
    fn deterministic_procedure_is_ef1_and_half_efx((seed, n, m) in shape()) {
        let inst = common::random_instance(seed, n, m);
        let matching = weakly_separated_matching(&inst);
        let start = Allocation::from_bundles(matching.iter().map(|&g| ItemSet::singleton(g)).collect(), m).unwrap();
        prop_assert!(check_weak_separation(&inst, &start));
        let (a, _) = deterministic_envy_cycles(&inst).unwrap();
        prop_assert!(a.is_complete());
        prop_assert!(min_ef1_ratio(&inst, &a).unwrap().at_least(&Rational::one()));
        prop_assert!(min_efx_ratio(&inst, &a).unwrap().at_least(&q(1, 2)));
    }

    #[test]
    fn serial_dictatorship_gives_one_item_each((seed, n, m) in shape()) {
        let inst = common::random_instance(seed, n, m);
        let d = rsd_enumerate(&inst).unwrap();
        let total: Rational = d.support().iter().map(|(p, _)| p.clone()).sum();
        prop_assert!(total.is_one());
        for (_, a) in d.support() {
            prop_assert!(a.as_matching().is_some());
        }
    }

    #[test]
    fn instance_json_round_trip((seed, n, m) in shape()) {
        let inst = pad_with_dummies(&common::random_instance(seed, n, m)).with_dummy_items(1);
        let text = io::to_canonical_string(&io::instance_to_json(&inst));
        let back = io::parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(io::to_canonical_string(&io::instance_to_json(&back)), text);
    }

    #[test]
    fn partitions_meet_their_levels(seed in any::<u64>(), m in 1usize..=8) {
        let inst = common::random_instance(seed, 2, m);
        for i in 0..2 {
            let p = balanced_partition(&inst, i).unwrap();
            let level = if inst.class() == ValuationClass::Additive { Rational::one() } else { q(1, 2) };
            prop_assert!(p.efx_ratio(&inst).at_least(&level));
            prop_assert!(inst.value(i, &p.parts.0) >= inst.value(i, &p.parts.1));
            let e = efx_partition(&inst, i).unwrap();
            prop_assert!(e.efx_ratio(&inst).at_least(&Rational::one()));
        }
    }

    #[test]
    fn two_agent_lotteries_meet_their_guarantees(seed in any::<u64>(), m in 1usize..=7) {
        let inst = common::random_instance(seed, 2, m);
        let ef = expost_report(&inst, &two_agent_lottery(&inst, LotteryTarget::EfPriority).unwrap()).unwrap();
        prop_assert!(ef.min_ex_ante.at_least(&Rational::one()) && ef.min_efx.at_least(&q(1, 2)));
        let efx = expost_report(&inst, &two_agent_lottery(&inst, LotteryTarget::EfxPriority).unwrap()).unwrap();
        prop_assert!(efx.min_ex_ante.at_least(&q(2, 3)) && efx.min_efx.at_least(&Rational::one()));
    }
}
