mod common;

use proptest::prelude::*;
use rand::Rng;

use trn::resource::{
    delta, prefix_usage, resource_consistent_order, resource_consistent_schedule, resource_events,
    usage_at, Ordering, ResourceConstraint,
};
use trn::temporal::{EventId, Schedule};

/// Random schedule over `n` events (integer times, so ties happen) and
/// `k` resource constraints with rates of both signs.
fn random_case(seed: u64, ordered_intervals: bool) -> (Schedule, Vec<ResourceConstraint>) {
    let mut rng = common::rng(seed);
    let n = rng.random_range(2..=8);
    let k = rng.random_range(1..=5);
    let s: Schedule = (0..n).map(|i| (EventId(i), rng.random_range(0..6) as f64)).collect();
    let rs = (0..k)
        .filter_map(|_| {
            let (mut a, mut b) = common::distinct_pair(&mut rng, n);
            if ordered_intervals {
                if s.get(a) == s.get(b) {
                    return None;
                }
                if s.get(a) > s.get(b) {
                    std::mem::swap(&mut a, &mut b);
                }
            }
            let rate = rng.random_range(1..=3) as f64 * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            Some(ResourceConstraint::new(a, b, rate).unwrap())
        })
        .collect();
    (s, rs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn event_point_check_matches_dense_sampling(seed in any::<u64>()) {
        let (s, rs) = random_case(seed, false);
        prop_assert_eq!(
            resource_consistent_schedule(&s, &rs).unwrap(),
            common::dense_resource_check(&s, &rs, 1e-9)
        );
    }

    #[test]
    fn usage_matches_definition(seed in any::<u64>(), t in -1.0f64..7.0) {
        let (s, rs) = random_case(seed, false);
        let lib = usage_at(&s, &rs, t).unwrap();
        prop_assert!((lib - common::usage_by_definition(&s, &rs, t)).abs() < 1e-12);
    }

    #[test]
    fn verdict_depends_only_on_event_order(seed in any::<u64>(), gaps in prop::collection::vec(0.01f64..10.0, 8)) {
        let (s, rs) = random_case(seed, false);
        let mut distinct: Vec<f64> = s.iter().map(|(_, t)| t).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let mut acc = -3.0;
        let remap: Vec<(f64, f64)> = distinct
            .iter()
            .zip(&gaps)
            .map(|(&t, g)| {
                acc += g;
                (t, acc)
            })
            .collect();
        let moved: Schedule = s
            .iter()
            .map(|(e, t)| (e, remap.iter().find(|(old, _)| *old == t).unwrap().1))
            .collect();
        prop_assert_eq!(
            resource_consistent_schedule(&s, &rs).unwrap(),
            resource_consistent_schedule(&moved, &rs).unwrap()
        );
    }

    #[test]
    fn order_check_agrees_with_schedule_check(seed in any::<u64>()) {
        // distinct times, every interval running forward
        let (s, rs) = random_case(seed, true);
        let re = resource_events(&rs);
        let mut seq: Vec<EventId> = re.iter().copied().collect();
        seq.sort_by(|a, b| s.get(*a).unwrap().total_cmp(&s.get(*b).unwrap()));
        let times: Vec<f64> = seq.iter().map(|e| s.get(*e).unwrap()).collect();
        prop_assume!(times.windows(2).all(|w| w[0] < w[1]));
        let sigma = Ordering::from_sequence(&seq).unwrap();
        prop_assert_eq!(
            resource_consistent_order(&sigma, &rs),
            resource_consistent_schedule(&s, &rs).unwrap()
        );
    }

    #[test]
    fn changes_cancel_out(seed in any::<u64>()) {
        let (_, rs) = random_case(seed, false);
        let total: f64 = resource_events(&rs).into_iter().map(|e| delta(e, &rs)).sum();
        prop_assert!(total.abs() < 1e-12);
        let seq: Vec<EventId> = resource_events(&rs).into_iter().collect();
        let prefix = prefix_usage(&seq, &rs);
        prop_assert!(prefix.last().unwrap().abs() < 1e-12);
    }
}
