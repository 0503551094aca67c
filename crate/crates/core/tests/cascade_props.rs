use std::collections::{BTreeSet, HashSet};

use cascade_pde::cascade::{density_field, hop_distances, interest_distance, Cascade, Population, SocialGraph};
use cascade_pde::field::DensityMode;
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(u32, u32)>)> {
    (2usize..40).prop_flat_map(|n| {
        let edge = (0..n as u32, 0..n as u32).prop_filter("no self loops", |(a, b)| a != b);
        (Just(n), prop::collection::vec(edge, 0..120))
    })
}

proptest! {
    #[test]
    fn multi_source_is_min_of_single_sources(
        (n, edges) in graph_strategy(),
        picks in prop::collection::btree_set(0u32..40, 1..5),
    ) {
        let g = SocialGraph::new(n, edges).unwrap();
        let sources: BTreeSet<u32> = picks.into_iter().filter(|&s| (s as usize) < n).collect();
        prop_assume!(!sources.is_empty());
        let multi = hop_distances(&g, &sources).unwrap();
        let singles: Vec<_> = sources
            .iter()
            .map(|&s| hop_distances(&g, &BTreeSet::from([s])).unwrap())
            .collect();
        for u in 0..n as u32 {
            let expect = singles.iter().filter_map(|d| d.get(u)).min();
            prop_assert_eq!(multi.get(u), expect);
        }
    }

    #[test]
    fn interest_distance_is_a_bounded_symmetric_dissimilarity(
        a in prop::collection::hash_set(0u8..30, 0..15),
        b in prop::collection::hash_set(0u8..30, 0..15),
    ) {
        prop_assume!(!a.is_empty() || !b.is_empty());
        let d = interest_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, interest_distance(&b, &a).unwrap());
        if !a.is_empty() {
            prop_assert_eq!(interest_distance(&a, &a).unwrap(), 0.0);
        }
    }

    #[test]
    fn density_field_invariants(
        (n, edges) in graph_strategy(),
        events in prop::collection::vec((0u32..40, 0.0f64..10.0), 0..60),
        count_mode in any::<bool>(),
        adopters_only in any::<bool>(),
    ) {
        let g = SocialGraph::new(n, edges).unwrap();
        let events: Vec<(u32, f64)> = events.into_iter().filter(|(u, _)| *u != 0 && (*u as usize) < n).collect();
        let cascade = Cascade::new(BTreeSet::from([0]), events).unwrap();
        let times = [0.5, 2.0, 5.0, 9.5];
        let mode = if count_mode { DensityMode::Count } else { DensityMode::Ratio };
        let population = if adopters_only { Population::Adopters } else { Population::Reachable };
        let report = density_field(&g, &cascade, &times, mode, population).unwrap();
        let f = &report.field;
        prop_assert!(f.is_cumulative());
        for (i, &x) in f.distances().iter().enumerate() {
            prop_assert!(x >= 1);
            let size = f.group_sizes()[&x] as f64;
            for k in 0..times.len() {
                let v = f.value(i, k);
                prop_assert!(v >= 0.0);
                match mode {
                    DensityMode::Ratio => prop_assert!(v <= 1.0),
                    DensityMode::Count => prop_assert!(v <= size),
                }
            }
        }
    }
}

#[test]
fn interest_distance_examples() {
    let a: HashSet<u32> = [1, 2].into();
    let b: HashSet<u32> = [2, 3].into();
    assert!((interest_distance(&a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    let c: HashSet<u32> = [7].into();
    assert_eq!(interest_distance(&a, &c).unwrap(), 1.0);
    let e: HashSet<u32> = HashSet::new();
    assert!(interest_distance(&e, &e).is_err());
}
