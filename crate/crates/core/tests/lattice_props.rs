//! Randomized laws for the truth-value lattice.
//!
//! Two generators: `grid_set` draws endpoints from a 1e-4 grid, far enough
//! apart that every law holds with exact equality; `raw_set` draws
//! arbitrary endpoints to exercise canonicalization and merge tolerance.

use fpl_core::aggregate::Registry;
use fpl_core::truth::{BorelSet, Interval, EPS};
use proptest::prelude::*;

fn grid_interval() -> impl Strategy<Value = Interval> {
    (0u32..=10_000, 0u32..=10_000).prop_map(|(a, b)| {
        let (lo, hi) = (a.min(b), a.max(b));
        Interval::new(f64::from(lo) / 10_000.0, f64::from(hi) / 10_000.0).unwrap()
    })
}

fn grid_set() -> impl Strategy<Value = BorelSet> {
    proptest::collection::vec(grid_interval(), 0..5).prop_map(BorelSet::from_intervals)
}

fn raw_set() -> impl Strategy<Value = BorelSet> {
    proptest::collection::vec((0f64..=1.0, 0f64..=1.0), 0..6).prop_map(|pairs| {
        BorelSet::from_intervals(
            pairs
                .into_iter()
                .map(|(a, b)| Interval::new(a.min(b), a.max(b)).unwrap()),
        )
    })
}

/// Sorted, in-range, non-touching parts: the canonical form invariant.
fn assert_canonical(s: &BorelSet) {
    let parts = s.intervals();
    for iv in parts {
        assert!(iv.lo() >= 0.0 && iv.hi() <= 1.0 && iv.lo() <= iv.hi());
    }
    for w in parts.windows(2) {
        assert!(
            w[1].lo() - w[0].hi() > EPS,
            "parts {:?} and {:?} should have merged",
            w[0],
            w[1]
        );
    }
}

proptest! {
    #[test]
    fn canonicalization_holds_for_arbitrary_endpoints(s in raw_set()) {
        assert_canonical(&s);
    }

    #[test]
    fn canonicalization_is_idempotent(s in raw_set()) {
        let again = BorelSet::from_intervals(s.intervals().iter().copied());
        prop_assert_eq!(again, s);
    }

    #[test]
    fn union_and_intersection_are_commutative(a in grid_set(), b in grid_set()) {
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert_eq!(a.intersect(&b), b.intersect(&a));
    }

    #[test]
    fn union_and_intersection_are_associative(
        a in grid_set(), b in grid_set(), c in grid_set()
    ) {
        prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
        prop_assert_eq!(a.intersect(&b).intersect(&c), a.intersect(&b.intersect(&c)));
    }

    #[test]
    fn union_and_intersection_are_idempotent(a in grid_set()) {
        prop_assert_eq!(a.union(&a), a.clone());
        prop_assert_eq!(a.intersect(&a), a);
    }

    #[test]
    fn absorption_holds_exactly(a in raw_set(), b in raw_set()) {
        prop_assert_eq!(a.union(&a.intersect(&b)), a.clone());
        prop_assert_eq!(a.intersect(&a.union(&b)), a);
    }

    #[test]
    fn intersection_distributes_over_union(
        a in grid_set(), b in grid_set(), c in grid_set()
    ) {
        prop_assert_eq!(
            a.intersect(&b.union(&c)),
            a.intersect(&b).union(&a.intersect(&c))
        );
    }

    #[test]
    fn inclusion_is_a_partial_order(a in grid_set(), b in grid_set(), c in grid_set()) {
        prop_assert!(a.included_in(&a));
        if a.included_in(&b) && b.included_in(&a) {
            prop_assert_eq!(&a, &b);
        }
        if a.included_in(&b) && b.included_in(&c) {
            prop_assert!(a.included_in(&c));
        }
    }

    #[test]
    fn lattice_operations_bound_their_arguments(a in grid_set(), b in grid_set()) {
        prop_assert!(a.included_in(&a.union(&b)));
        prop_assert!(a.intersect(&b).included_in(&a));
        prop_assert!(BorelSet::empty().included_in(&a));
        prop_assert!(a.included_in(&BorelSet::full()));
    }

    #[test]
    fn inclusion_agrees_with_point_sampling(a in grid_set(), b in grid_set()) {
        // Membership probes decide inclusion for closed interval unions:
        // each interval of `a` is checked at its endpoints, midpoint,
        // every generator grid point inside it, and the midpoints of
        // `b`'s gaps (which witness straddling).
        let mut probes = Vec::new();
        for iv in a.intervals() {
            probes.push(iv.lo());
            probes.push(iv.hi());
            probes.push(0.5 * (iv.lo() + iv.hi()));
            let k0 = (iv.lo() * 10_000.0).ceil() as u32;
            let k1 = (iv.hi() * 10_000.0).floor() as u32;
            probes.extend((k0..=k1).map(|k| f64::from(k) / 10_000.0));
            for w in b.intervals().windows(2) {
                probes.push(0.5 * (w[0].hi() + w[1].lo()));
            }
        }
        let sampled = probes.iter().all(|&x| !a.contains(x) || b.contains(x));
        prop_assert_eq!(a.included_in(&b), sampled);
    }

    #[test]
    fn aggregators_lift_their_point_functions(x in 0f64..=1.0, y in 0f64..=1.0) {
        let registry = Registry::with_builtins();
        for name in ["min", "max", "prod", "luka", "mean"] {
            let agg = registry.get(name).unwrap();
            let sets = [BorelSet::point(x).unwrap(), BorelSet::point(y).unwrap()];
            let lifted = agg.apply_sets(&sets).unwrap();
            let direct = agg.apply_points(&[x, y]).unwrap();
            prop_assert!(lifted.contains(direct));
            prop_assert_eq!(lifted.intervals().len(), 1);
            prop_assert!(lifted.intervals()[0].hi() - lifted.intervals()[0].lo() <= EPS);
        }
    }

    #[test]
    fn aggregators_are_monotone_in_inclusion(
        x1 in grid_set(), y1 in grid_set(), x2 in grid_set(), y2 in grid_set()
    ) {
        let small_x = if x1.intersect(&x2).is_empty() { x1.clone() } else { x1.intersect(&x2) };
        let small_y = if y1.intersect(&y2).is_empty() { y1.clone() } else { y1.intersect(&y2) };
        prop_assume!(!x1.is_empty() && !y1.is_empty());
        let registry = Registry::with_builtins();
        for name in ["min", "max", "prod", "luka", "mean"] {
            let agg = registry.get(name).unwrap();
            let narrow = agg.apply_sets(&[small_x.clone(), small_y.clone()]).unwrap();
            let wide = agg.apply_sets(&[x1.clone(), y1.clone()]).unwrap();
            prop_assert!(
                narrow.included_in(&wide),
                "{name}: {narrow} not inside {wide}"
            );
        }
    }
}
