//! Constrained dominance, fast non-dominated sorting and crowding distance.

use super::MoeaError;
use crate::problem::EvaluatedSolution;

/// Pareto dominance on all-minimization vectors.
pub fn pareto_dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Feasibility-first dominance: a feasible solution beats an infeasible one,
/// lower total violation wins between infeasible ones, and Pareto dominance
/// on internal values decides between feasible ones.
pub fn constrained_dominates(a: &EvaluatedSolution, b: &EvaluatedSolution) -> Result<bool, MoeaError> {
    if a.internal_values.len() != b.internal_values.len() {
        return Err(MoeaError::DimensionMismatch {
            left: a.internal_values.len(),
            right: b.internal_values.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &EvaluatedSolution, b: &EvaluatedSolution) -> bool {
    match (a.feasible(), b.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.total_violation() < b.total_violation(),
        (true, true) => pareto_dominates(&a.internal_values, &b.internal_values),
    }
}

/// Deb's fast non-dominated sort under constrained dominance. Returns fronts
/// as lists of population indices, best front first; indices inside a front
/// are ascending.
pub fn fast_non_dominated_sort(population: &[EvaluatedSolution]) -> Result<Vec<Vec<usize>>, MoeaError> {
    let n = population.len();
    if n == 0 {
        return Err(MoeaError::EmptyPopulation);
    }
    let m = population[0].internal_values.len();
    if let Some(bad) = population.iter().find(|s| s.internal_values.len() != m) {
        return Err(MoeaError::DimensionMismatch {
            left: m,
            right: bad.internal_values.len(),
        });
    }
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates_unchecked(&population[i], &population[j]) {
                dominates[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_unchecked(&population[j], &population[i]) {
                dominates[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    Ok(fronts)
}

/// Crowding distance of each point in a front (all-minimization values).
///
/// Points holding an objective's minimum or maximum value are boundaries and
/// get `+inf`; objectives with zero span are skipped. Tied values are
/// resolved through neighbour values rather than sort positions, so the
/// result does not depend on input order. Fronts of one or two points are
/// all boundary.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].len();
    let mut dist = vec![0.0f64; n];
    for k in 0..m {
        let mut values: Vec<f64> = front.iter().map(|p| p[k]).collect();
        values.sort_by(f64::total_cmp);
        let (lo, hi) = (values[0], values[n - 1]);
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for (i, p) in front.iter().enumerate() {
            let v = p[k];
            if v == lo || v == hi {
                dist[i] = f64::INFINITY;
                continue;
            }
            // Neighbours among the other points: the sorted list holds `v`
            // at least once, so drop one copy of it.
            let pos = values.partition_point(|&x| x < v);
            let count = values[pos..].iter().take_while(|&&x| x == v).count();
            let prev = if count > 1 { v } else { values[pos - 1] };
            let next = if count > 1 { v } else { values[pos + 1] };
            dist[i] += (next - prev) / span;
        }
    }
    dist
}
