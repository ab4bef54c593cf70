use rand::Rng;

use super::operators::{make_offspring, TournamentRule};
use super::sorting::{crowding_distance, fast_non_dominated_sort};
use super::{fill_with_duplicates, split_duplicates, AlgoParams, Individual, MoeaError};
use crate::problem::{DeploymentProblem, EvaluatedSolution};

/// Elitist survival: whole fronts while they fit, then the last front
/// truncated by descending crowding distance (ties keep merge order).
/// Repeated genotypes only compete once; copies pad the result when there
/// are fewer than `n` distinct genotypes.
pub fn nsga2_survival(merged: Vec<EvaluatedSolution>, n: usize) -> Result<Vec<Individual>, MoeaError> {
    if merged.is_empty() {
        return Err(MoeaError::EmptyPopulation);
    }
    let (unique, repeats) = split_duplicates(merged);
    let keep = n.min(unique.len());
    let mut next = select(unique, keep)?;
    fill_with_duplicates(&mut next, repeats, n);
    Ok(next)
}

fn select(merged: Vec<EvaluatedSolution>, n: usize) -> Result<Vec<Individual>, MoeaError> {
    let fronts = fast_non_dominated_sort(&merged)?;
    let mut slots: Vec<Option<EvaluatedSolution>> = merged.into_iter().map(Some).collect();
    let mut next = Vec::with_capacity(n);
    for (rank, front) in fronts.iter().enumerate() {
        if next.len() >= n {
            break;
        }
        let values: Vec<Vec<f64>> = front
            .iter()
            .map(|&i| slots[i].as_ref().expect("each index in one front").internal_values.clone())
            .collect();
        let dist = crowding_distance(&values);
        let mut order: Vec<usize> = (0..front.len()).collect();
        if next.len() + front.len() > n {
            order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]));
            order.truncate(n - next.len());
        }
        for k in order {
            let solution = slots[front[k]].take().expect("each index in one front");
            next.push(Individual {
                solution,
                rank,
                crowding: dist[k],
                niche: None,
            });
        }
    }
    Ok(next)
}

pub fn nsga2_generation<R: Rng + ?Sized>(
    population: &[Individual],
    problem: &DeploymentProblem,
    params: &AlgoParams,
    rng: &mut R,
) -> Result<Vec<Individual>, MoeaError> {
    if population.len() != params.population_size {
        return Err(MoeaError::PopulationSize {
            expected: params.population_size,
            got: population.len(),
        });
    }
    let offspring = make_offspring(population, problem, params, TournamentRule::DominanceThenCrowding, rng)?;
    let mut merged: Vec<EvaluatedSolution> = population.iter().map(|i| i.solution.clone()).collect();
    merged.extend(offspring);
    nsga2_survival(merged, params.population_size)
}
