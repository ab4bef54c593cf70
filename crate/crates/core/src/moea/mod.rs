//! NSGA-II and NSGA-III over integer genotypes with constrained dominance.

mod nsga2;
mod nsga3;
mod operators;
mod refpoints;
mod sorting;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{DeploymentProblem, EvaluatedSolution, ProblemError};

pub use nsga2::{nsga2_generation, nsga2_survival};
pub use nsga3::{associate, normalize, nsga3_generation, nsga3_survival, Normalization};
pub use operators::{make_offspring, mutate, random_genotype, uniform_crossover, TournamentRule};
pub use refpoints::{generate_reference_points, reference_point_count, ReferencePointSet};
pub use sorting::{constrained_dominates, crowding_distance, fast_non_dominated_sort, pareto_dominates};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MoeaError {
    #[error("empty population")]
    EmptyPopulation,
    #[error("objective vectors differ in length ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid algorithm parameters: {0}")]
    InvalidParams(String),
    #[error("population has {got} individuals, expected {expected}")]
    PopulationSize { expected: usize, got: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Nsga2,
    Nsga3,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Nsga2 => "NSGA-II",
            Algorithm::Nsga3 => "NSGA-III",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "nsga2" | "nsgaii" => Ok(Algorithm::Nsga2),
            "nsga3" | "nsgaiii" => Ok(Algorithm::Nsga3),
            _ => Err(format!("unknown algorithm `{s}` (expected nsga2 or nsga3)")),
        }
    }
}

/// Splits `merged` into first occurrences of each genotype and repeats,
/// both in input order.
pub(crate) fn split_duplicates(merged: Vec<EvaluatedSolution>) -> (Vec<EvaluatedSolution>, Vec<EvaluatedSolution>) {
    let mut seen = HashSet::new();
    merged.into_iter().partition(|s| seen.insert(s.genotype.clone()))
}

/// Tops `selected` up to `n` with repeated genotypes. Only reached when
/// there are fewer than `n` distinct genotypes, so every repeat has its
/// first occurrence in `selected`; it inherits rank and niche, with zero
/// crowding.
pub(crate) fn fill_with_duplicates(selected: &mut Vec<Individual>, repeats: Vec<EvaluatedSolution>, n: usize) {
    for solution in repeats {
        if selected.len() >= n {
            break;
        }
        let twin = selected.iter().find(|i| i.solution.genotype == solution.genotype);
        let (rank, niche) = twin.map_or((0, None), |t| (t.rank, t.niche));
        selected.push(Individual {
            solution,
            rank,
            crowding: 0.0,
            niche,
        });
    }
}

/// Reference line an NSGA-III survivor is attached to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Niche {
    pub reference: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub solution: EvaluatedSolution,
    /// Front index, 0 = best.
    pub rank: usize,
    /// NSGA-II crowding distance; `+inf` on front boundaries.
    pub crowding: f64,
    pub niche: Option<Niche>,
}

impl Individual {
    pub fn new(solution: EvaluatedSolution) -> Self {
        Individual {
            solution,
            rank: 0,
            crowding: 0.0,
            niche: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob_per_gene: f64,
    pub seed: u64,
    pub nsga3_divisions: usize,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_GENERATIONS: usize = 100;
pub const DEFAULT_NSGA2_POPULATION: usize = 100;
pub const DEFAULT_CROSSOVER_PROB: f64 = 0.9;

/// Default lattice divisions for NSGA-III.
pub fn default_divisions(objectives: usize) -> usize {
    match objectives {
        0..=2 => 99,
        3 => 12,
        _ => 6,
    }
}

impl AlgoParams {
    /// Conventional defaults: NSGA-II with 100 individuals, NSGA-III with one
    /// individual per reference direction rounded up to a multiple of four;
    /// mutation rate `1 / slots`.
    pub fn defaults_for(algorithm: Algorithm, objectives: usize, slots: usize) -> Self {
        let divisions = default_divisions(objectives);
        let population_size = match algorithm {
            Algorithm::Nsga2 => DEFAULT_NSGA2_POPULATION,
            Algorithm::Nsga3 => {
                let points = reference_point_count(objectives.max(2), divisions);
                points.div_ceil(4) * 4
            }
        };
        AlgoParams {
            population_size,
            generations: DEFAULT_GENERATIONS,
            crossover_prob: DEFAULT_CROSSOVER_PROB,
            mutation_prob_per_gene: 1.0 / slots.max(1) as f64,
            seed: DEFAULT_SEED,
            nsga3_divisions: divisions,
        }
    }

    pub fn validate(&self) -> Result<(), MoeaError> {
        let bad = |m: String| Err(MoeaError::InvalidParams(m));
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return bad(format!("population size {} must be even and >= 4", self.population_size));
        }
        if self.generations < 1 {
            return bad("generations must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad(format!("crossover probability {} outside [0, 1]", self.crossover_prob));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob_per_gene) {
            return bad(format!("mutation probability {} outside [0, 1]", self.mutation_prob_per_gene));
        }
        if self.nsga3_divisions < 1 {
            return bad("NSGA-III divisions must be >= 1".into());
        }
        Ok(())
    }
}

fn evaluate_all(
    problem: &DeploymentProblem,
    genotypes: &[crate::problem::Genotype],
) -> Result<Vec<EvaluatedSolution>, MoeaError> {
    genotypes
        .iter()
        .map(|g| problem.evaluate(g).map_err(MoeaError::from))
        .collect()
}

/// Uniform-random initial population with ranks (and crowding) assigned.
pub fn initial_population<R: Rng + ?Sized>(
    problem: &DeploymentProblem,
    params: &AlgoParams,
    rng: &mut R,
) -> Result<Vec<Individual>, MoeaError> {
    let genotypes: Vec<_> = (0..params.population_size)
        .map(|_| random_genotype(problem, rng))
        .collect();
    nsga2_survival(evaluate_all(problem, &genotypes)?, params.population_size)
}

/// Runs `params.generations` generations and returns the feasible members of
/// the final first front, one per genotype, sorted by genotype. When nothing
/// feasible survives, the first front (minimum violation) is returned instead.
pub fn run_evolution<R: Rng + ?Sized>(
    problem: &DeploymentProblem,
    params: &AlgoParams,
    algorithm: Algorithm,
    rng: &mut R,
) -> Result<Vec<EvaluatedSolution>, MoeaError> {
    params.validate()?;
    let refs = match algorithm {
        Algorithm::Nsga2 => None,
        Algorithm::Nsga3 => {
            if problem.objectives.len() < 2 {
                return Err(MoeaError::InvalidParams(
                    "NSGA-III needs at least two objectives".into(),
                ));
            }
            Some(generate_reference_points(problem.objectives.len(), params.nsga3_divisions))
        }
    };
    let mut population = initial_population(problem, params, rng)?;
    for _ in 0..params.generations {
        population = match &refs {
            None => nsga2_generation(&population, problem, params, rng)?,
            Some(r) => nsga3_generation(&population, problem, params, r, rng)?,
        };
    }
    Ok(first_front(&population))
}

/// Deduplicated first front of a population, feasible members preferred.
pub fn first_front(population: &[Individual]) -> Vec<EvaluatedSolution> {
    let solutions: Vec<EvaluatedSolution> = population.iter().map(|i| i.solution.clone()).collect();
    let Ok(fronts) = fast_non_dominated_sort(&solutions) else {
        return Vec::new();
    };
    let front: Vec<&EvaluatedSolution> = fronts[0].iter().map(|&i| &solutions[i]).collect();
    let feasible: Vec<&EvaluatedSolution> = front.iter().copied().filter(|s| s.feasible()).collect();
    let chosen = if feasible.is_empty() { front } else { feasible };
    let mut out: Vec<EvaluatedSolution> = chosen.into_iter().cloned().collect();
    out.sort_by(|a, b| a.genotype.cmp(&b.genotype));
    out.dedup_by(|a, b| a.genotype == b.genotype);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nsga3_default_population() {
        let p = AlgoParams::defaults_for(Algorithm::Nsga3, 3, 2);
        assert_eq!(p.nsga3_divisions, 12);
        assert_eq!(p.population_size, 92);
        assert_eq!(p.mutation_prob_per_gene, 0.5);
        let p = AlgoParams::defaults_for(Algorithm::Nsga2, 2, 4);
        assert_eq!(p.population_size, 100);
        assert_eq!(p.crossover_prob, 0.9);
    }

    #[test]
    fn param_validation() {
        let mut p = AlgoParams::defaults_for(Algorithm::Nsga2, 2, 2);
        assert!(p.validate().is_ok());
        p.population_size = 5;
        assert!(p.validate().is_err());
        p.population_size = 2;
        assert!(p.validate().is_err());
        p.population_size = 4;
        p.generations = 0;
        assert!(p.validate().is_err());
        p.generations = 1;
        p.crossover_prob = 1.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn algorithm_names() {
        assert_eq!("nsga2".parse::<Algorithm>().unwrap(), Algorithm::Nsga2);
        assert_eq!("NSGA-III".parse::<Algorithm>().unwrap(), Algorithm::Nsga3);
        assert!("moead".parse::<Algorithm>().is_err());
    }
}
