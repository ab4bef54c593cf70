mod common;

use iacopt::doml::parse_optimization_layer;
use iacopt::moea::{
    generate_reference_points, initial_population, nsga2_generation, nsga3_generation, pareto_dominates,
    run_evolution, AlgoParams, Algorithm, Individual,
};
use iacopt::orchestrator::{optimize, OptimizeOptions};
use iacopt::problem::{build_problem, DeploymentProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn problem(seed: u64) -> DeploymentProblem {
    let inst = common::synthetic_instance(seed);
    build_problem(&parse_optimization_layer(&inst.doml).unwrap(), &inst.catalogue).unwrap()
}

fn params(p: &DeploymentProblem, alg: Algorithm) -> AlgoParams {
    AlgoParams {
        population_size: 20,
        generations: 30,
        ..AlgoParams::defaults_for(alg, p.objectives.len(), p.slots.len())
    }
}

#[test]
fn same_seed_same_front() {
    for seed in 0..6 {
        let p = problem(seed);
        for alg in [Algorithm::Nsga2, Algorithm::Nsga3] {
            let prm = params(&p, alg);
            let a = run_evolution(&p, &prm, alg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
            let b = run_evolution(&p, &prm, alg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn optimize_output_is_byte_identical_per_seed() {
    let src = common::example_doml();
    let cat = common::reference_catalogue();
    let opts = OptimizeOptions { seed: 1234, ..Default::default() };
    let a = optimize(&src, &cat, &opts).unwrap();
    let b = optimize(&src, &cat, &opts).unwrap();
    assert_eq!(a.text, b.text);
}

/// Every feasible first-front member of generation t is still present, or
/// weakly dominated by a feasible member, in generation t+1, unless the
/// merged first front overflowed and filled the whole next population.
fn audit(before: &[Individual], after: &[Individual]) {
    let overflowed = after.iter().all(|n| n.rank == 0);
    if overflowed {
        for n in after.iter().filter(|n| n.solution.feasible()) {
            assert!(!after.iter().any(|o| {
                o.solution.feasible() && pareto_dominates(&o.solution.internal_values, &n.solution.internal_values)
            }));
        }
    }
    for old in before.iter().filter(|i| i.rank == 0 && i.solution.feasible()) {
        let kept = after.iter().any(|n| {
            n.solution.feasible()
                && (n.solution.internal_values == old.solution.internal_values
                    || pareto_dominates(&n.solution.internal_values, &old.solution.internal_values))
        });
        assert!(kept || overflowed, "lost {:?}", old.solution.objective_values);
    }
    let best_violation = |pop: &[Individual]| pop.iter().map(|i| i.solution.total_violation()).fold(f64::INFINITY, f64::min);
    assert!(best_violation(after) <= best_violation(before));
}

#[test]
fn survival_is_elitist() {
    for seed in 0..8 {
        let p = problem(seed);
        for alg in [Algorithm::Nsga2, Algorithm::Nsga3] {
            let prm = params(&p, alg);
            let refs = generate_reference_points(p.objectives.len(), prm.nsga3_divisions);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pop = initial_population(&p, &prm, &mut rng).unwrap();
            for _ in 0..prm.generations {
                let next = match alg {
                    Algorithm::Nsga2 => nsga2_generation(&pop, &p, &prm, &mut rng).unwrap(),
                    Algorithm::Nsga3 => nsga3_generation(&pop, &p, &prm, &refs, &mut rng).unwrap(),
                };
                assert_eq!(next.len(), prm.population_size);
                audit(&pop, &next);
                pop = next;
            }
        }
    }
}

#[test]
fn single_objective_nsga3_is_rejected() {
    let p = problem(1);
    let mut single = p.clone();
    single.objectives.truncate(1);
    let prm = params(&single, Algorithm::Nsga3);
    assert!(run_evolution(&single, &prm, Algorithm::Nsga3, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}
