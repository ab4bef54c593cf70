//! The deployment problem: slots, per-slot candidates, objective aggregation
//! and constraint violation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalogue::{Catalogue, CatalogueElement, ElementFilter, ElementType};
use crate::doml::{
    AggregateBound, BoundKind, Direction, Objective, ObjectiveSpec, OptimizationSpec, Requirement,
    Target, ELEMENTS_KEY,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("the optimization layer has no `{ELEMENTS_KEY}` requirement")]
    MissingElements,
    #[error("unknown element type `{0}` in `{ELEMENTS_KEY}` (expected VM or Storage)")]
    UnknownElementType(String),
    #[error("no objectives declared")]
    NoObjectives,
    #[error("slot {slot} ({element_type}) has no candidates after matchmaking; failing requirements: {}", failing.join(", "))]
    NoCandidates {
        slot: usize,
        element_type: ElementType,
        failing: Vec<String>,
    },
    #[error("requirement `{id}` bounds `{target}`, which is not cost, availability or performance")]
    UnknownBoundTarget { id: String, target: String },
    #[error("genotype has {got} genes but the problem has {expected} slots")]
    GenotypeLength { expected: usize, got: usize },
    #[error("gene {gene} out of range for slot {slot} with {len} candidates")]
    InvalidGene { slot: usize, gene: usize, len: usize },
}

/// One catalogue index per slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Genotype(pub Vec<usize>);

impl Genotype {
    pub fn genes(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Genotype {
    fn from(v: Vec<usize>) -> Self {
        Genotype(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// One entry per aggregate bound, in problem order.
    pub violations: Vec<f64>,
    pub total_violation: f64,
    pub feasible: bool,
}

impl ConstraintReport {
    pub fn from_violations(violations: Vec<f64>) -> Self {
        let total_violation: f64 = violations.iter().sum();
        ConstraintReport {
            feasible: total_violation == 0.0,
            violations,
            total_violation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSolution {
    pub genotype: Genotype,
    /// User orientation, one per declared objective.
    pub objective_values: Vec<f64>,
    /// All-minimization orientation.
    pub internal_values: Vec<f64>,
    pub constraints: ConstraintReport,
}

impl EvaluatedSolution {
    pub fn feasible(&self) -> bool {
        self.constraints.feasible
    }

    pub fn total_violation(&self) -> f64 {
        self.constraints.total_violation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentProblem {
    pub slots: Vec<ElementType>,
    pub candidates: Vec<Vec<CatalogueElement>>,
    pub objectives: Vec<ObjectiveSpec>,
    pub bounds: Vec<AggregateBound>,
    pub priority: usize,
    /// Non-fatal notes gathered while building (ignored requirements etc.).
    pub warnings: Vec<String>,
}

pub fn parse_slots(value: &str) -> Result<Vec<ElementType>, ProblemError> {
    value
        .split(',')
        .map(|tok| {
            tok.parse::<ElementType>()
                .map_err(|_| ProblemError::UnknownElementType(tok.trim().to_string()))
        })
        .collect()
}

pub fn build_problem(
    spec: &OptimizationSpec,
    catalogue: &Catalogue,
) -> Result<DeploymentProblem, ProblemError> {
    if spec.objectives.is_empty() {
        return Err(ProblemError::NoObjectives);
    }
    let elements = spec.elements_value().ok_or(ProblemError::MissingElements)?;
    let slots = parse_slots(elements)?;

    let mut warnings = Vec::new();
    let mut bounds = Vec::new();
    for req in &spec.requirements {
        match req {
            Requirement::Bound(b) => {
                if b.target.metric().is_none() {
                    return Err(ProblemError::UnknownBoundTarget {
                        id: b.id.clone(),
                        target: b.target.as_str().to_string(),
                    });
                }
                bounds.push(b.clone());
            }
            Requirement::Categorical(c) if !c.target.is_categorical() => {
                warnings.push(format!(
                    "requirement `{}` targets `{}`, which is neither provider nor region; ignored",
                    c.id,
                    c.target.as_str()
                ));
            }
            _ => {}
        }
    }

    let filter = ElementFilter::from_requirements(&spec.requirements);
    let mut candidates = Vec::with_capacity(slots.len());
    for (slot, &element_type) in slots.iter().enumerate() {
        let list: Vec<CatalogueElement> = catalogue
            .of_type(element_type)
            .filter(|e| filter.accepts(e))
            .cloned()
            .collect();
        if list.is_empty() {
            return Err(ProblemError::NoCandidates {
                slot,
                element_type,
                failing: failing_requirements(spec, catalogue, element_type),
            });
        }
        candidates.push(list);
    }

    Ok(DeploymentProblem {
        slots,
        candidates,
        objectives: spec.objectives.clone(),
        bounds,
        priority: spec.priority,
        warnings,
    })
}

/// Requirement ids that reject at least one element of `element_type`.
fn failing_requirements(
    spec: &OptimizationSpec,
    catalogue: &Catalogue,
    element_type: ElementType,
) -> Vec<String> {
    if catalogue.of_type(element_type).next().is_none() {
        return vec![format!("catalogue has no {element_type} elements")];
    }
    spec.requirements
        .iter()
        .filter(|r| {
            let single = ElementFilter::from_requirements(std::slice::from_ref(*r));
            catalogue.of_type(element_type).any(|e| !single.accepts(e))
        })
        .map(|r| r.id().to_string())
        .collect()
}

impl DeploymentProblem {
    /// Product of candidate-list lengths, saturating.
    pub fn space_size(&self) -> u128 {
        self.candidates
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
    }

    pub fn check(&self, genotype: &Genotype) -> Result<(), ProblemError> {
        if genotype.0.len() != self.slots.len() {
            return Err(ProblemError::GenotypeLength {
                expected: self.slots.len(),
                got: genotype.0.len(),
            });
        }
        for (slot, (&gene, cands)) in genotype.0.iter().zip(&self.candidates).enumerate() {
            if gene >= cands.len() {
                return Err(ProblemError::InvalidGene {
                    slot,
                    gene,
                    len: cands.len(),
                });
            }
        }
        Ok(())
    }

    pub fn chosen<'a>(&'a self, genotype: &'a Genotype) -> impl Iterator<Item = &'a CatalogueElement> {
        genotype.0.iter().zip(&self.candidates).map(|(&g, c)| &c[g])
    }

    pub fn decisions(&self, genotype: &Genotype) -> Vec<String> {
        self.chosen(genotype).map(|e| e.id.clone()).collect()
    }

    /// cost and performance are sums, availability the arithmetic mean.
    fn aggregate(&self, genotype: &Genotype, metric: Objective) -> f64 {
        let n = genotype.0.len() as f64;
        match metric {
            Objective::Cost => self.chosen(genotype).map(|e| e.cost).sum(),
            Objective::Performance => self.chosen(genotype).map(|e| e.performance).sum(),
            Objective::Availability => {
                self.chosen(genotype).map(|e| e.availability).sum::<f64>() / n
            }
        }
    }

    pub fn evaluate(&self, genotype: &Genotype) -> Result<EvaluatedSolution, ProblemError> {
        let objective_values = evaluate_objectives(genotype, self)?;
        let constraints = evaluate_constraints(genotype, self)?;
        Ok(EvaluatedSolution {
            internal_values: to_internal(&objective_values, &self.objectives),
            genotype: genotype.clone(),
            objective_values,
            constraints,
        })
    }
}

pub fn evaluate_objectives(
    genotype: &Genotype,
    problem: &DeploymentProblem,
) -> Result<Vec<f64>, ProblemError> {
    problem.check(genotype)?;
    Ok(problem
        .objectives
        .iter()
        .map(|o| problem.aggregate(genotype, o.name))
        .collect())
}

/// Violation of one bound, normalized by `max(|threshold|, 1)`.
pub fn bound_violation(kind: BoundKind, threshold: f64, value: f64) -> f64 {
    let raw = match kind {
        BoundKind::Max => value - threshold,
        BoundKind::Min => threshold - value,
    };
    raw.max(0.0) / threshold.abs().max(1.0)
}

pub fn evaluate_constraints(
    genotype: &Genotype,
    problem: &DeploymentProblem,
) -> Result<ConstraintReport, ProblemError> {
    problem.check(genotype)?;
    let violations = problem
        .bounds
        .iter()
        .map(|b| {
            let metric = match &b.target {
                Target::Cost => Objective::Cost,
                Target::Availability => Objective::Availability,
                Target::Performance => Objective::Performance,
                other => {
                    return Err(ProblemError::UnknownBoundTarget {
                        id: b.id.clone(),
                        target: other.as_str().to_string(),
                    })
                }
            };
            Ok(bound_violation(b.kind, b.threshold, problem.aggregate(genotype, metric)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConstraintReport::from_violations(violations))
}

pub fn to_internal(values: &[f64], objectives: &[ObjectiveSpec]) -> Vec<f64> {
    values
        .iter()
        .zip(objectives)
        .map(|(&v, o)| match o.direction {
            Direction::Min => v,
            Direction::Max => -v,
        })
        .collect()
}

/// Inverse of [`to_internal`]; negation is its own inverse.
pub fn from_internal(values: &[f64], objectives: &[ObjectiveSpec]) -> Vec<f64> {
    to_internal(values, objectives)
}
