//! Exhaustive enumeration for small instances: the ground-truth feasible
//! Pareto set. Dominance is coded here separately from `moea`.

use thiserror::Error;

use crate::problem::{DeploymentProblem, EvaluatedSolution, Genotype, ProblemError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_combinations: u128,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_combinations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("search space has {size} combinations, above the enumeration budget of {budget}")]
    BudgetExceeded { size: u128, budget: u128 },
    #[error("enumeration budget must be positive")]
    ZeroBudget,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Every genotype of the Cartesian product, evaluated, in odometer order
/// (last slot varies fastest).
pub fn enumerate_all(
    problem: &DeploymentProblem,
    budget: EnumerationBudget,
) -> Result<Vec<EvaluatedSolution>, OracleError> {
    if budget.max_combinations == 0 {
        return Err(OracleError::ZeroBudget);
    }
    let size = problem.space_size();
    if size > budget.max_combinations {
        return Err(OracleError::BudgetExceeded {
            size,
            budget: budget.max_combinations,
        });
    }
    let lens: Vec<usize> = problem.candidates.iter().map(Vec::len).collect();
    let mut genes = vec![0usize; lens.len()];
    let mut out = Vec::with_capacity(size as usize);
    loop {
        out.push(problem.evaluate(&Genotype(genes.clone()))?);
        let mut slot = lens.len();
        loop {
            if slot == 0 {
                return Ok(out);
            }
            slot -= 1;
            genes[slot] += 1;
            if genes[slot] < lens[slot] {
                break;
            }
            genes[slot] = 0;
        }
    }
}

/// `a` no worse than `b` everywhere and strictly better somewhere.
fn weakly_better_everywhere(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Feasible solutions not dominated by another feasible solution. With no
/// feasible solution, the ones sharing the minimum total violation.
/// The result is sorted by genotype.
pub fn pareto_filter(all: &[EvaluatedSolution]) -> Vec<EvaluatedSolution> {
    let feasible: Vec<&EvaluatedSolution> = all.iter().filter(|s| s.constraints.feasible).collect();
    let mut out: Vec<EvaluatedSolution> = if feasible.is_empty() {
        let least = all
            .iter()
            .map(|s| s.constraints.total_violation)
            .fold(f64::INFINITY, f64::min);
        all.iter()
            .filter(|s| s.constraints.total_violation == least)
            .cloned()
            .collect()
    } else {
        feasible
            .iter()
            .filter(|s| {
                !feasible
                    .iter()
                    .any(|o| weakly_better_everywhere(&o.internal_values, &s.internal_values))
            })
            .map(|s| (*s).clone())
            .collect()
    };
    out.sort_by(|a, b| a.genotype.cmp(&b.genotype));
    out
}

pub fn brute_force_pareto(
    problem: &DeploymentProblem,
    budget: EnumerationBudget,
) -> Result<Vec<EvaluatedSolution>, OracleError> {
    Ok(pareto_filter(&enumerate_all(problem, budget)?))
}
