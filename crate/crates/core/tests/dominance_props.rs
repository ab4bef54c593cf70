use iacopt::moea::{constrained_dominates, crowding_distance, fast_non_dominated_sort};
use iacopt::problem::{ConstraintReport, EvaluatedSolution, Genotype};
use proptest::prelude::*;

fn solution(values: Vec<f64>, violation: f64, id: usize) -> EvaluatedSolution {
    EvaluatedSolution {
        genotype: Genotype(vec![id]),
        objective_values: values.clone(),
        internal_values: values,
        constraints: ConstraintReport::from_violations(vec![violation]),
    }
}

/// Small integer grids force ties and dominance chains.
fn population(m: usize) -> impl Strategy<Value = Vec<EvaluatedSolution>> {
    prop::collection::vec(
        (prop::collection::vec(0u8..5, m), prop_oneof![3 => Just(0u8), 1 => 1u8..4]),
        1..24,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (v, viol))| solution(v.into_iter().map(f64::from).collect(), f64::from(viol), i))
            .collect()
    })
}

fn dom(a: &EvaluatedSolution, b: &EvaluatedSolution) -> bool {
    constrained_dominates(a, b).unwrap()
}

/// Reference ranking: repeatedly peel the members nobody remaining dominates.
fn peel(pop: &[EvaluatedSolution]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..pop.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| dom(&pop[j], &pop[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1500))]

    #[test]
    fn dominance_is_a_strict_partial_order(pop in population(3)) {
        for a in &pop {
            prop_assert!(!dom(a, a));
            for b in &pop {
                prop_assert!(!(dom(a, b) && dom(b, a)));
                for c in &pop {
                    if dom(a, b) && dom(b, c) {
                        prop_assert!(dom(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn fronts_match_pairwise_peeling(m in 1usize..4, seed_pop in population(3)) {
        let pop: Vec<EvaluatedSolution> = seed_pop
            .into_iter()
            .map(|mut s| { s.internal_values.truncate(m); s.objective_values.truncate(m); s })
            .collect();
        let fronts = fast_non_dominated_sort(&pop).unwrap();
        prop_assert_eq!(&fronts, &peel(&pop));
        let mut all: Vec<usize> = fronts.concat();
        all.sort();
        prop_assert_eq!(all, (0..pop.len()).collect::<Vec<_>>());
        for w in fronts.windows(2) {
            for &j in &w[1] {
                prop_assert!(w[0].iter().any(|&i| dom(&pop[i], &pop[j])));
            }
        }
    }

    #[test]
    fn crowding_is_permutation_invariant(
        pts in prop::collection::vec(prop::collection::vec(0u8..6, 3), 1..20),
        shuffle_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let front: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|&x| f64::from(x)).collect()).collect();
        let mut perm: Vec<usize> = (0..front.len()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed));
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| front[i].clone()).collect();
        let d = crowding_distance(&front);
        let ds = crowding_distance(&shuffled);
        for (k, &i) in perm.iter().enumerate() {
            prop_assert_eq!(d[i], ds[k]);
        }
        prop_assert!(d.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn feasible_beats_infeasible_regardless_of_objectives() {
    let good = solution(vec![9.0, 9.0], 0.0, 0);
    let bad = solution(vec![0.0, 0.0], 0.5, 1);
    assert!(dom(&good, &bad));
    assert!(!dom(&bad, &good));
}

#[test]
fn less_violation_wins_among_infeasible() {
    let a = solution(vec![5.0], 0.1, 0);
    let b = solution(vec![1.0], 0.2, 1);
    assert!(dom(&a, &b));
}

#[test]
fn boundary_points_get_infinite_crowding() {
    let front = vec![vec![0.0, 4.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![4.0, 0.0]];
    let d = crowding_distance(&front);
    assert!(d[0].is_infinite() && d[3].is_infinite());
    // (2-0)/4 + (4-1)/4
    assert!((d[1] - 1.25).abs() < 1e-12);
    assert!((d[2] - 1.25).abs() < 1e-12);
}
