//! NSGA-III survival: normalization against ideal and nadir points,
//! association with reference lines, and niche-preserving selection.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::operators::{make_offspring, TournamentRule};
use super::refpoints::ReferencePointSet;
use super::sorting::fast_non_dominated_sort;
use super::{fill_with_duplicates, split_duplicates, AlgoParams, Individual, MoeaError, Niche};
use crate::problem::{DeploymentProblem, EvaluatedSolution};

/// Axis weights off the main axis in the achievement scalarizing function.
const ASF_FLOOR: f64 = 1e-6;
/// Smallest span used when dividing by intercepts.
const SPAN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub ideal: Vec<f64>,
    pub spans: Vec<f64>,
    /// True when the hyperplane through the extreme points was unusable and
    /// per-objective maxima were used instead.
    pub degenerate: bool,
}

impl Normalization {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.ideal)
            .zip(&self.spans)
            .map(|((x, z), s)| (x - z) / s)
            .collect()
    }
}

/// Ideal point from `all`; extreme points, intercepts and the fallback nadir
/// from `candidates`.
pub fn normalize(all: &[&[f64]], candidates: &[&[f64]]) -> Normalization {
    let m = all[0].len();
    let ideal: Vec<f64> = (0..m)
        .map(|k| all.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let translated: Vec<Vec<f64>> = candidates
        .iter()
        .map(|v| v.iter().zip(&ideal).map(|(x, z)| x - z).collect())
        .collect();

    let extremes: Vec<usize> = (0..m)
        .map(|axis| {
            let asf = |t: &Vec<f64>| {
                t.iter()
                    .enumerate()
                    .map(|(k, x)| x / if k == axis { 1.0 } else { ASF_FLOOR })
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let mut best = 0;
            let mut best_val = f64::INFINITY;
            for (i, t) in translated.iter().enumerate() {
                let v = asf(t);
                if v < best_val {
                    best_val = v;
                    best = i;
                }
            }
            best
        })
        .collect();

    let maxima: Vec<f64> = (0..m)
        .map(|k| translated.iter().map(|t| t[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();

    let intercepts = {
        let e = DMatrix::from_fn(m, m, |r, c| translated[extremes[r]][c]);
        let ones = DVector::from_element(m, 1.0);
        e.lu().solve(&ones).and_then(|b| {
            let ints: Vec<f64> = b.iter().map(|x| 1.0 / x).collect();
            let usable = ints.iter().all(|&x| x.is_finite() && x > SPAN_FLOOR);
            usable.then_some(ints)
        })
    };
    let degenerate = intercepts.is_none();
    let spans = intercepts
        .unwrap_or(maxima)
        .into_iter()
        .map(|s| s.max(SPAN_FLOOR))
        .collect();
    Normalization {
        ideal,
        spans,
        degenerate,
    }
}

fn perpendicular_distance(point: &[f64], direction: &[f64]) -> f64 {
    let ww: f64 = direction.iter().map(|w| w * w).sum();
    let pw: f64 = point.iter().zip(direction).map(|(p, w)| p * w).sum();
    let scale = if ww > 0.0 { pw / ww } else { 0.0 };
    point
        .iter()
        .zip(direction)
        .map(|(p, w)| (p - scale * w).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Closest reference line for a normalized point; ties go to the lower index.
pub fn associate(point: &[f64], refs: &ReferencePointSet) -> Niche {
    let mut best = Niche {
        reference: 0,
        distance: f64::INFINITY,
    };
    for (j, w) in refs.points.iter().enumerate() {
        let d = perpendicular_distance(point, w);
        if d < best.distance {
            best = Niche {
                reference: j,
                distance: d,
            };
        }
    }
    best
}

/// Reference-point survival. Repeated genotypes only compete once; copies
/// pad the result when there are fewer than `n` distinct genotypes.
pub fn nsga3_survival<R: Rng + ?Sized>(
    merged: Vec<EvaluatedSolution>,
    n: usize,
    refs: &ReferencePointSet,
    rng: &mut R,
) -> Result<Vec<Individual>, MoeaError> {
    if merged.is_empty() {
        return Err(MoeaError::EmptyPopulation);
    }
    let (unique, repeats) = split_duplicates(merged);
    let keep = n.min(unique.len());
    let mut next = select(unique, keep, refs, rng)?;
    fill_with_duplicates(&mut next, repeats, n);
    Ok(next)
}

fn select<R: Rng + ?Sized>(
    merged: Vec<EvaluatedSolution>,
    n: usize,
    refs: &ReferencePointSet,
    rng: &mut R,
) -> Result<Vec<Individual>, MoeaError> {
    let fronts = fast_non_dominated_sort(&merged)?;
    if let Some(first) = merged.first() {
        if refs.dimension() != first.internal_values.len() {
            return Err(MoeaError::DimensionMismatch {
                left: refs.dimension(),
                right: first.internal_values.len(),
            });
        }
    }

    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(n); // (index, rank)
    let mut last: Option<(usize, &Vec<usize>)> = None;
    for (rank, front) in fronts.iter().enumerate() {
        if chosen.len() + front.len() <= n {
            chosen.extend(front.iter().map(|&i| (i, rank)));
            if chosen.len() == n {
                break;
            }
        } else {
            last = Some((rank, front));
            break;
        }
    }

    let mut niches: Vec<Option<Niche>> = vec![None; merged.len()];
    if let Some((last_rank, last_front)) = last {
        let all: Vec<&[f64]> = merged.iter().map(|s| s.internal_values.as_slice()).collect();
        let st: Vec<usize> = chosen.iter().map(|&(i, _)| i).chain(last_front.iter().copied()).collect();
        let st_vals: Vec<&[f64]> = st.iter().map(|&i| all[i]).collect();
        let norm = normalize(&all, &st_vals);
        for &i in &st {
            niches[i] = Some(associate(&norm.apply(all[i]), refs));
        }

        let mut counts = vec![0usize; refs.len()];
        for &(i, _) in &chosen {
            counts[niches[i].expect("associated").reference] += 1;
        }
        let mut pool: Vec<usize> = last_front.clone();
        let mut active = vec![true; refs.len()];
        let mut remaining = n - chosen.len();
        while remaining > 0 {
            let min_count = (0..refs.len())
                .filter(|&j| active[j])
                .map(|j| counts[j])
                .min()
                .expect("some reference stays active while the pool is non-empty");
            let j_min: Vec<usize> = (0..refs.len()).filter(|&j| active[j] && counts[j] == min_count).collect();
            let j = j_min[rng.gen_range(0..j_min.len())];
            let members: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|&i| niches[i].expect("associated").reference == j)
                .collect();
            if members.is_empty() {
                active[j] = false;
                continue;
            }
            let pick = if counts[j] == 0 {
                *members
                    .iter()
                    .min_by(|&&a, &&b| {
                        niches[a].unwrap().distance.total_cmp(&niches[b].unwrap().distance)
                    })
                    .expect("non-empty")
            } else {
                members[rng.gen_range(0..members.len())]
            };
            pool.retain(|&i| i != pick);
            chosen.push((pick, last_rank));
            counts[j] += 1;
            remaining -= 1;
        }
    }

    let mut slots: Vec<Option<EvaluatedSolution>> = merged.into_iter().map(Some).collect();
    Ok(chosen
        .into_iter()
        .map(|(i, rank)| Individual {
            solution: slots[i].take().expect("selected once"),
            rank,
            crowding: 0.0,
            niche: niches[i],
        })
        .collect())
}

pub fn nsga3_generation<R: Rng + ?Sized>(
    population: &[Individual],
    problem: &DeploymentProblem,
    params: &AlgoParams,
    refs: &ReferencePointSet,
    rng: &mut R,
) -> Result<Vec<Individual>, MoeaError> {
    if population.len() != params.population_size {
        return Err(MoeaError::PopulationSize {
            expected: params.population_size,
            got: population.len(),
        });
    }
    let offspring = make_offspring(population, problem, params, TournamentRule::Dominance, rng)?;
    let mut merged: Vec<EvaluatedSolution> = population.iter().map(|i| i.solution.clone()).collect();
    merged.extend(offspring);
    nsga3_survival(merged, params.population_size, refs, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moea::generate_reference_points;
    use crate::problem::{ConstraintReport, Genotype};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sol(values: &[f64], gene: usize) -> EvaluatedSolution {
        EvaluatedSolution {
            genotype: Genotype(vec![gene]),
            objective_values: values.to_vec(),
            internal_values: values.to_vec(),
            constraints: ConstraintReport::from_violations(vec![]),
        }
    }

    #[test]
    fn identical_vectors_take_degenerate_path() {
        let v = [3.0, 3.0, 3.0];
        let all: Vec<&[f64]> = vec![&v, &v, &v];
        let norm = normalize(&all, &all);
        assert!(norm.degenerate);
        assert!(norm.spans.iter().all(|&s| s == SPAN_FLOOR));
        assert!(norm.apply(&v).iter().all(|x| x.is_finite()));

        let merged: Vec<EvaluatedSolution> = (0..8).map(|i| sol(&v, i)).collect();
        let refs = generate_reference_points(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = nsga3_survival(merged, 4, &refs, &mut rng).unwrap();
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn unit_simplex_front_normalizes_to_itself() {
        let pts = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0]];
        let all: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let norm = normalize(&all, &all);
        assert!(!norm.degenerate);
        for s in &norm.spans {
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn association_picks_nearest_line() {
        let refs = generate_reference_points(2, 2);
        let n = associate(&[0.9, 0.1], &refs);
        assert_eq!(n.reference, 2);
        let n = associate(&[0.4, 0.4], &refs);
        assert_eq!(n.reference, 1);
        assert!(n.distance < 1e-12);
    }

    #[test]
    fn exact_fit_preserves_population() {
        // Two fronts of distinct points; the first has exactly n members.
        let first: Vec<EvaluatedSolution> =
            (0..3).map(|i| sol(&[i as f64, 2.0 - i as f64], i)).collect();
        let worse: Vec<EvaluatedSolution> =
            (0..3).map(|i| sol(&[i as f64 + 5.0, 7.0 - i as f64], 10 + i)).collect();
        let mut merged = first.clone();
        merged.extend(worse);
        let refs = generate_reference_points(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = nsga3_survival(merged, 3, &refs, &mut rng).unwrap();
        let kept: Vec<_> = out.iter().map(|i| i.solution.clone()).collect();
        assert_eq!(kept, first);
        assert!(out.iter().all(|i| i.rank == 0));
    }

    #[test]
    fn niching_spreads_over_lines() {
        // Front 0: six points, two near each of three lines; keep three.
        let pts = [
            [1.0, 0.0], [0.98, 0.02], [0.5, 0.5], [0.52, 0.48], [0.0, 1.0], [0.02, 0.98],
        ];
        let merged: Vec<EvaluatedSolution> = pts.iter().enumerate().map(|(i, p)| sol(p, i)).collect();
        let refs = generate_reference_points(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = nsga3_survival(merged, 3, &refs, &mut rng).unwrap();
        let mut lines: Vec<usize> = out.iter().map(|i| i.niche.unwrap().reference).collect();
        lines.sort();
        assert_eq!(lines, vec![0, 1, 2]);
    }
}
