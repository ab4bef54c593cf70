//! Variation operators: binary tournament, uniform crossover, reset mutation.

use rand::Rng;

use super::sorting::dominates_unchecked;
use super::{AlgoParams, Individual, MoeaError};
use crate::problem::{DeploymentProblem, EvaluatedSolution, Genotype};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TournamentRule {
    /// Constrained dominance, then larger crowding distance, then a coin flip.
    DominanceThenCrowding,
    /// Constrained dominance, then a coin flip.
    Dominance,
}

pub fn random_genotype<R: Rng + ?Sized>(problem: &DeploymentProblem, rng: &mut R) -> Genotype {
    Genotype(
        problem
            .candidates
            .iter()
            .map(|c| rng.gen_range(0..c.len()))
            .collect(),
    )
}

fn tournament<'a, R: Rng + ?Sized>(
    population: &'a [Individual],
    rule: TournamentRule,
    rng: &mut R,
) -> &'a Individual {
    let a = &population[rng.gen_range(0..population.len())];
    let b = &population[rng.gen_range(0..population.len())];
    if dominates_unchecked(&a.solution, &b.solution) {
        return a;
    }
    if dominates_unchecked(&b.solution, &a.solution) {
        return b;
    }
    if rule == TournamentRule::DominanceThenCrowding {
        if a.crowding > b.crowding {
            return a;
        }
        if b.crowding > a.crowding {
            return b;
        }
    }
    if rng.gen_bool(0.5) {
        a
    } else {
        b
    }
}

/// Swaps each gene position between the two parents with probability one half.
pub fn uniform_crossover<R: Rng + ?Sized>(a: &Genotype, b: &Genotype, rng: &mut R) -> (Genotype, Genotype) {
    let mut x = a.clone();
    let mut y = b.clone();
    for i in 0..x.0.len() {
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut x.0[i], &mut y.0[i]);
        }
    }
    (x, y)
}

/// Resets each gene to a uniformly drawn candidate index with probability `rate`.
pub fn mutate<R: Rng + ?Sized>(g: &mut Genotype, problem: &DeploymentProblem, rate: f64, rng: &mut R) {
    for (gene, cands) in g.0.iter_mut().zip(&problem.candidates) {
        if rng.gen_bool(rate) {
            *gene = rng.gen_range(0..cands.len());
        }
    }
}

/// Produces `params.population_size` evaluated offspring.
pub fn make_offspring<R: Rng + ?Sized>(
    population: &[Individual],
    problem: &DeploymentProblem,
    params: &AlgoParams,
    rule: TournamentRule,
    rng: &mut R,
) -> Result<Vec<EvaluatedSolution>, MoeaError> {
    if population.is_empty() {
        return Err(MoeaError::EmptyPopulation);
    }
    let n = params.population_size;
    let mut children: Vec<Genotype> = Vec::with_capacity(n + 1);
    while children.len() < n {
        let p1 = &tournament(population, rule, rng).solution.genotype;
        let p2 = &tournament(population, rule, rng).solution.genotype;
        let (mut c1, mut c2) = if rng.gen_bool(params.crossover_prob) {
            uniform_crossover(p1, p2, rng)
        } else {
            (p1.clone(), p2.clone())
        };
        mutate(&mut c1, problem, params.mutation_prob_per_gene, rng);
        mutate(&mut c2, problem, params.mutation_prob_per_gene, rng);
        children.push(c1);
        children.push(c2);
    }
    children.truncate(n);
    // Results are written back in child order, so evaluation order never
    // affects the trajectory.
    children
        .iter()
        .map(|g| problem.evaluate(g).map_err(MoeaError::from))
        .collect()
}
