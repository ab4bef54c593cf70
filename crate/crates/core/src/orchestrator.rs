//! End-to-end pipeline: parse, build, pick an algorithm, search, rank the
//! top solutions and write them back as DOML.

use std::cmp::Ordering;
use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::catalogue::Catalogue;
use crate::doml::{
    emit_concretization, emit_solutions, parse_document, DomlError, EmitError, EmitOptions,
    ObjectiveSpec, ObjectiveValue, OptimizationSpec, SolutionRecord,
};
use crate::moea::{run_evolution, AlgoParams, Algorithm, MoeaError};
use crate::oracle::{brute_force_pareto, EnumerationBudget, OracleError};
use crate::problem::{build_problem, DeploymentProblem, EvaluatedSolution, ProblemError};

pub const DEFAULT_MAX_SOLUTIONS: usize = 5;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("parse error: {0}")]
    Parse(#[from] DomlError),
    #[error("input has no optimization layer")]
    NoOptimizationLayer,
    #[error("no objectives declared")]
    NoObjectives,
    #[error("cannot build problem: {0}")]
    Problem(#[from] ProblemError),
    #[error("search failed: {0}")]
    Search(#[from] MoeaError),
    #[error("{0}")]
    Oracle(#[from] OracleError),
    #[error("cannot emit output: {0}")]
    Emit(#[from] EmitError),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("{0}")]
    Infeasible(Box<Infeasibility>),
}

/// No configuration meets every aggregate bound. Carries the closest miss.
#[derive(Debug, Clone)]
pub struct Infeasibility {
    pub report: RunReport,
    pub best: EvaluatedSolution,
    pub decisions: Vec<String>,
    /// (requirement id, normalized violation) for every violated bound.
    pub violated: Vec<(String, f64)>,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .violated
            .iter()
            .map(|(id, v)| format!("{id} violated by {v:.4}"))
            .collect();
        write!(
            f,
            "no configuration satisfies the requirements; minimum-violation configuration [{}] (total violation {:.4}: {})",
            self.decisions.join(", "),
            self.best.constraints.total_violation,
            parts.join("; ")
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub brute_force: bool,
    pub search_space_size: u128,
    pub population_size: usize,
    pub generations: usize,
    pub evaluations: u128,
    /// Feasible solutions found before truncation to the top k.
    pub feasible_solutions: usize,
    /// Solutions written to the output.
    pub solutions_emitted: usize,
    pub seed: u64,
    pub duration: Duration,
    pub warnings: Vec<String>,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let method = if self.brute_force {
            "brute force".to_string()
        } else {
            self.algorithm.to_string()
        };
        write!(
            f,
            "{method}: space {} | pop {} | gens {} | evals {} | feasible {} | emitted {} | seed {} | {:.3}s",
            self.search_space_size,
            self.population_size,
            self.generations,
            self.evaluations,
            self.feasible_solutions,
            self.solutions_emitted,
            self.seed,
            self.duration.as_secs_f64()
        )
    }
}

/// Caller-supplied settings; `None` fields fall back to defaults.
#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub algorithm: Option<Algorithm>,
    pub population_size: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_prob: Option<f64>,
    pub mutation_prob_per_gene: Option<f64>,
    pub nsga3_divisions: Option<usize>,
    pub seed: u64,
    pub max_solutions: usize,
    pub brute_force: bool,
    pub budget: EnumerationBudget,
    pub emit: EmitOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            algorithm: None,
            population_size: None,
            generations: None,
            crossover_prob: None,
            mutation_prob_per_gene: None,
            nsga3_divisions: None,
            seed: crate::moea::DEFAULT_SEED,
            max_solutions: DEFAULT_MAX_SOLUTIONS,
            brute_force: false,
            budget: EnumerationBudget::default(),
            emit: EmitOptions::default(),
        }
    }
}

impl OptimizeOptions {
    pub fn params_for(&self, algorithm: Algorithm, problem: &DeploymentProblem) -> AlgoParams {
        let mut p = AlgoParams::defaults_for(algorithm, problem.objectives.len(), problem.slots.len());
        if let Some(d) = self.nsga3_divisions {
            p.nsga3_divisions = d;
            if algorithm == Algorithm::Nsga3 && self.population_size.is_none() {
                let points = crate::moea::reference_point_count(problem.objectives.len().max(2), d);
                p.population_size = points.div_ceil(4) * 4;
            }
        }
        if let Some(n) = self.population_size {
            p.population_size = n;
        }
        if let Some(g) = self.generations {
            p.generations = g;
        }
        if let Some(c) = self.crossover_prob {
            p.crossover_prob = c;
        }
        if let Some(m) = self.mutation_prob_per_gene {
            p.mutation_prob_per_gene = m;
        }
        p.seed = self.seed;
        p
    }
}

/// Three or more objectives use NSGA-III; one or two use NSGA-II.
pub fn select_algorithm(spec: &OptimizationSpec) -> Result<Algorithm, OptimizeError> {
    match spec.objectives.len() {
        0 => Err(OptimizeError::NoObjectives),
        1 | 2 => Ok(Algorithm::Nsga2),
        _ => Ok(Algorithm::Nsga3),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSolution {
    pub name: String,
    pub active: bool,
    pub solution: EvaluatedSolution,
}

fn oriented_cmp(a: f64, b: f64, spec: &ObjectiveSpec) -> Ordering {
    match spec.direction {
        crate::doml::Direction::Min => a.total_cmp(&b),
        crate::doml::Direction::Max => b.total_cmp(&a),
    }
}

/// Orders by the priority objective, then the other objectives in declaration
/// order, then genotype; keeps the first `k` (after dropping duplicate
/// genotypes) and marks the first one active.
pub fn rank_and_select(
    solutions: &[EvaluatedSolution],
    objectives: &[ObjectiveSpec],
    priority: usize,
    k: usize,
) -> Result<Vec<RankedSolution>, OptimizeError> {
    if k == 0 {
        return Err(OptimizeError::InvalidOptions("max solutions must be >= 1".into()));
    }
    if solutions.is_empty() {
        return Err(OptimizeError::InvalidOptions("no solutions to rank".into()));
    }
    let mut order: Vec<usize> = std::iter::once(priority)
        .chain((0..objectives.len()).filter(|&j| j != priority))
        .collect();
    order.retain(|&j| j < objectives.len());
    let mut sorted: Vec<&EvaluatedSolution> = solutions.iter().collect();
    sorted.sort_by(|a, b| {
        order
            .iter()
            .map(|&j| oriented_cmp(a.objective_values[j], b.objective_values[j], &objectives[j]))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.genotype.cmp(&b.genotype))
    });
    sorted.dedup_by(|a, b| a.genotype == b.genotype);
    Ok(sorted
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, s)| RankedSolution {
            name: format!("sol{}", i + 1),
            active: i == 0,
            solution: s.clone(),
        })
        .collect())
}

pub fn solution_record(
    ranked: &RankedSolution,
    problem: &DeploymentProblem,
    emit: &EmitOptions,
) -> SolutionRecord {
    SolutionRecord {
        name: ranked.name.clone(),
        objective_values: problem
            .objectives
            .iter()
            .zip(&ranked.solution.objective_values)
            .map(|(o, &value)| ObjectiveValue {
                objective: o.name,
                value,
                unit: emit.unit_for(o.name).to_string(),
            })
            .collect(),
        decisions: problem.decisions(&ranked.solution.genotype),
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutput {
    pub text: String,
    pub report: RunReport,
    pub solutions: Vec<RankedSolution>,
    pub records: Vec<SolutionRecord>,
}

pub fn optimize(
    doml_text: &str,
    catalogue: &Catalogue,
    options: &OptimizeOptions,
) -> Result<OptimizeOutput, OptimizeError> {
    let started = Instant::now();
    if options.max_solutions == 0 {
        return Err(OptimizeError::InvalidOptions("max solutions must be >= 1".into()));
    }
    let doc = parse_document(doml_text)?;
    let spec = doc.optimization().ok_or(OptimizeError::NoOptimizationLayer)?;
    let problem = build_problem(spec, catalogue)?;
    let algorithm = match options.algorithm {
        Some(a) => a,
        None => select_algorithm(spec)?,
    };
    let params = options.params_for(algorithm, &problem);

    let mut warnings: Vec<String> = doc.warnings.iter().map(|w| w.to_string()).collect();
    warnings.extend(problem.warnings.iter().cloned());

    let (found, evaluations, generations) = if options.brute_force {
        let front = brute_force_pareto(&problem, options.budget)?;
        (front, problem.space_size(), 0)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let front = run_evolution(&problem, &params, algorithm, &mut rng)?;
        let evals = params.population_size as u128 * (params.generations as u128 + 1);
        (front, evals, params.generations)
    };

    let mut report = RunReport {
        algorithm,
        brute_force: options.brute_force,
        search_space_size: problem.space_size(),
        population_size: if options.brute_force { 0 } else { params.population_size },
        generations,
        evaluations,
        feasible_solutions: found.iter().filter(|s| s.feasible()).count(),
        solutions_emitted: 0,
        seed: options.seed,
        duration: Duration::ZERO,
        warnings,
    };

    if found.iter().all(|s| !s.feasible()) {
        report.duration = started.elapsed();
        let best = found
            .iter()
            .min_by(|a, b| {
                a.total_violation()
                    .total_cmp(&b.total_violation())
                    .then_with(|| a.genotype.cmp(&b.genotype))
            })
            .cloned()
            .ok_or_else(|| OptimizeError::InvalidOptions("search returned nothing".into()))?;
        let violated = problem
            .bounds
            .iter()
            .zip(&best.constraints.violations)
            .filter(|(_, &v)| v > 0.0)
            .map(|(b, &v)| (b.id.clone(), v))
            .collect();
        return Err(OptimizeError::Infeasible(Box::new(Infeasibility {
            decisions: problem.decisions(&best.genotype),
            report,
            best,
            violated,
        })));
    }

    let ranked = rank_and_select(&found, &problem.objectives, problem.priority, options.max_solutions)?;
    let records: Vec<SolutionRecord> = ranked
        .iter()
        .map(|r| solution_record(r, &problem, &options.emit))
        .collect();

    let mut text = emit_solutions(doml_text, &doc, &records)?;
    match doc.infrastructure() {
        Some(model) => {
            for k in 1..=records.len() {
                let name = format!("opt_infra{k}");
                if doc.concretizations().any(|c| c.name == name) {
                    return Err(EmitError::NameClash(name).into());
                }
            }
            let (blocks, concrete_warnings) =
                emit_concretization(&records, model, catalogue, &options.emit)?;
            if !text.ends_with('\n') {
                text.push('\n');
            }
            text.push('\n');
            text.push_str(&blocks);
            report.warnings.extend(concrete_warnings);
        }
        None => report
            .warnings
            .push("no infrastructure layer; concretization skipped".to_string()),
    }

    report.solutions_emitted = records.len();
    report.duration = started.elapsed();
    Ok(OptimizeOutput {
        text,
        report,
        solutions: ranked,
        records,
    })
}
