//! Python bindings for the `iacopt` deployment optimizer.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use ::iacopt::catalogue as cat;
use ::iacopt::doml;
use ::iacopt::moea::{self, Algorithm};
use ::iacopt::oracle::{self, EnumerationBudget};
use ::iacopt::orchestrator::{self, OptimizeError, OptimizeOptions};
use ::iacopt::problem::{self as prob, Genotype};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

create_exception!(iacopt, IacoptError, PyException);
create_exception!(iacopt, ParseError, IacoptError);
create_exception!(iacopt, CatalogueError, IacoptError);
create_exception!(iacopt, ProblemError, IacoptError);
create_exception!(iacopt, InfeasibleError, IacoptError);

fn parse_err(e: doml::DomlError) -> PyErr {
    ParseError::new_err(e.to_string())
}

fn catalogue_err(e: cat::CatalogueError) -> PyErr {
    CatalogueError::new_err(e.to_string())
}

fn problem_err(e: impl std::fmt::Display) -> PyErr {
    ProblemError::new_err(e.to_string())
}

fn optimize_err(e: OptimizeError) -> PyErr {
    match e {
        OptimizeError::Parse(e) => parse_err(e),
        OptimizeError::Infeasible(info) => InfeasibleError::new_err(info.to_string()),
        OptimizeError::InvalidOptions(m) => PyValueError::new_err(m),
        other => IacoptError::new_err(other.to_string()),
    }
}

fn algorithm_arg(name: Option<&str>) -> PyResult<Option<Algorithm>> {
    match name {
        None | Some("auto") => Ok(None),
        Some(s) => s.parse::<Algorithm>().map(Some).map_err(PyValueError::new_err),
    }
}

/// Infrastructure element catalogue.
#[pyclass(module = "iacopt", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Catalogue {
    inner: cat::Catalogue,
}

#[pymethods]
impl Catalogue {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        cat::Catalogue::from_json(text)
            .map(|inner| Catalogue { inner })
            .map_err(catalogue_err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        cat::load_catalogue(path)
            .map(|inner| Catalogue { inner })
            .map_err(catalogue_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn element_ids(&self) -> Vec<String> {
        self.inner.elements.iter().map(|e| e.id.clone()).collect()
    }

    fn lookup_image(&self, provider: &str) -> Option<String> {
        self.inner.lookup_image(provider).map(str::to_string)
    }

    fn __len__(&self) -> usize {
        self.inner.elements.len()
    }

    fn __repr__(&self) -> String {
        format!("Catalogue({} elements, {} images)", self.inner.elements.len(), self.inner.vm_images.len())
    }
}

/// The optimization layer of a DOML document.
#[pyclass(module = "iacopt", frozen, skip_from_py_object)]
#[derive(Clone)]
struct OptimizationSpec {
    inner: doml::OptimizationSpec,
}

#[pymethods]
impl OptimizationSpec {
    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    /// `(objective, direction)` pairs in declaration order.
    #[getter]
    fn objectives(&self) -> Vec<(String, String)> {
        self.inner
            .objectives
            .iter()
            .map(|o| (o.name.to_string(), o.direction.as_str().to_string()))
            .collect()
    }

    #[getter]
    fn requirement_ids(&self) -> Vec<String> {
        self.inner.requirements.iter().map(|r| r.id().to_string()).collect()
    }

    #[getter]
    fn priority(&self) -> usize {
        self.inner.priority
    }

    #[getter]
    fn elements(&self) -> Option<String> {
        self.inner.elements_value().map(str::to_string)
    }

    /// Solution blocks already present: `{name: decisions}`.
    #[getter]
    fn solutions(&self) -> BTreeMap<String, Vec<String>> {
        self.inner
            .solutions
            .iter()
            .map(|s| (s.name.clone(), s.decisions.clone()))
            .collect()
    }

    fn select_algorithm(&self) -> PyResult<String> {
        orchestrator::select_algorithm(&self.inner)
            .map(|a| a.to_string())
            .map_err(optimize_err)
    }

    fn __repr__(&self) -> String {
        format!("OptimizationSpec({:?}, {} objectives)", self.inner.name, self.inner.objectives.len())
    }
}

/// A parsed DOML document.
#[pyclass(module = "iacopt", frozen)]
struct Document {
    inner: doml::Document,
}

#[pymethods]
impl Document {
    #[getter]
    fn optimization(&self) -> Option<OptimizationSpec> {
        self.inner.optimization().map(|o| OptimizationSpec { inner: o.clone() })
    }

    #[getter]
    fn has_infrastructure(&self) -> bool {
        self.inner.infrastructure().is_some()
    }

    #[getter]
    fn concretizations(&self) -> Vec<String> {
        self.inner.concretizations().map(|c| c.name.clone()).collect()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.iter().map(|w| w.to_string()).collect()
    }

    /// Canonical DOML text of the document.
    fn emit(&self) -> String {
        doml::emit_document(&self.inner)
    }
}

/// One evaluated configuration.
#[pyclass(module = "iacopt", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct Solution {
    genotype: Vec<usize>,
    decisions: Vec<String>,
    objective_values: Vec<f64>,
    violations: Vec<f64>,
    total_violation: f64,
    feasible: bool,
}

#[pymethods]
impl Solution {
    fn __repr__(&self) -> String {
        format!(
            "Solution({:?}, objectives={:?}, feasible={})",
            self.decisions,
            self.objective_values,
            if self.feasible { "True" } else { "False" }
        )
    }
}

impl Solution {
    fn new(s: &prob::EvaluatedSolution, problem: &prob::DeploymentProblem) -> Self {
        Solution {
            genotype: s.genotype.0.clone(),
            decisions: problem.decisions(&s.genotype),
            objective_values: s.objective_values.clone(),
            violations: s.constraints.violations.clone(),
            total_violation: s.constraints.total_violation,
            feasible: s.constraints.feasible,
        }
    }
}

/// A deployment search space: slots, their candidate elements, objectives
/// and aggregate bounds.
#[pyclass(module = "iacopt", frozen)]
struct Problem {
    inner: prob::DeploymentProblem,
}

#[pymethods]
impl Problem {
    #[getter]
    fn slots(&self) -> Vec<String> {
        self.inner.slots.iter().map(|s| s.to_string()).collect()
    }

    #[getter]
    fn candidates(&self) -> Vec<Vec<String>> {
        self.inner
            .candidates
            .iter()
            .map(|c| c.iter().map(|e| e.id.clone()).collect())
            .collect()
    }

    #[getter]
    fn space_size(&self) -> u128 {
        self.inner.space_size()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn evaluate(&self, genotype: Vec<usize>) -> PyResult<Solution> {
        let s = self.inner.evaluate(&Genotype(genotype)).map_err(problem_err)?;
        Ok(Solution::new(&s, &self.inner))
    }

    /// Evolves a population and returns the final feasible first front.
    #[pyo3(signature = (algorithm = "nsga2", population = None, generations = None, seed = moea::DEFAULT_SEED))]
    fn run_evolution(
        &self,
        py: Python<'_>,
        algorithm: &str,
        population: Option<usize>,
        generations: Option<usize>,
        seed: u64,
    ) -> PyResult<Vec<Solution>> {
        let alg: Algorithm = algorithm.parse().map_err(PyValueError::new_err)?;
        let mut params = moea::AlgoParams::defaults_for(alg, self.inner.objectives.len(), self.inner.slots.len());
        if let Some(n) = population {
            params.population_size = n;
        }
        if let Some(g) = generations {
            params.generations = g;
        }
        params.seed = seed;
        let problem = &self.inner;
        let front = py
            .detach(|| moea::run_evolution(problem, &params, alg, &mut ChaCha8Rng::seed_from_u64(seed)))
            .map_err(problem_err)?;
        Ok(front.iter().map(|s| Solution::new(s, problem)).collect())
    }

    /// Exact feasible Pareto set by exhaustive enumeration.
    #[pyo3(signature = (budget = 1_000_000))]
    fn brute_force_pareto(&self, py: Python<'_>, budget: u128) -> PyResult<Vec<Solution>> {
        let problem = &self.inner;
        let front = py
            .detach(|| oracle::brute_force_pareto(problem, EnumerationBudget { max_combinations: budget }))
            .map_err(problem_err)?;
        Ok(front.iter().map(|s| Solution::new(s, problem)).collect())
    }

    fn __repr__(&self) -> String {
        format!("Problem(slots={:?}, space_size={})", self.slots(), self.inner.space_size())
    }
}

/// Summary of one optimization run.
#[pyclass(module = "iacopt", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct RunReport {
    algorithm: String,
    brute_force: bool,
    search_space_size: u128,
    population_size: usize,
    generations: usize,
    evaluations: u128,
    feasible_solutions: usize,
    solutions_emitted: usize,
    seed: u64,
    seconds: f64,
    warnings: Vec<String>,
}

#[pymethods]
impl RunReport {
    fn __repr__(&self) -> String {
        format!(
            "RunReport({}, evaluations={}, emitted={})",
            self.algorithm, self.evaluations, self.solutions_emitted
        )
    }
}

impl From<&orchestrator::RunReport> for RunReport {
    fn from(r: &orchestrator::RunReport) -> Self {
        RunReport {
            algorithm: r.algorithm.to_string(),
            brute_force: r.brute_force,
            search_space_size: r.search_space_size,
            population_size: r.population_size,
            generations: r.generations,
            evaluations: r.evaluations,
            feasible_solutions: r.feasible_solutions,
            solutions_emitted: r.solutions_emitted,
            seed: r.seed,
            seconds: r.duration.as_secs_f64(),
            warnings: r.warnings.clone(),
        }
    }
}

/// A ranked solution in the optimizer output.
#[pyclass(module = "iacopt", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct RankedSolution {
    name: String,
    active: bool,
    decisions: Vec<String>,
    objective_values: Vec<f64>,
}

#[pyclass(module = "iacopt", frozen, get_all)]
struct OptimizeResult {
    text: String,
    report: RunReport,
    solutions: Vec<RankedSolution>,
}

#[pyfunction]
fn parse_document(text: &str) -> PyResult<Document> {
    doml::parse_document(text).map(|inner| Document { inner }).map_err(parse_err)
}

#[pyfunction]
fn read_input_archive(path: std::path::PathBuf) -> PyResult<String> {
    doml::read_input_archive(path).map_err(|e| ParseError::new_err(e.to_string()))
}

#[pyfunction]
fn build_problem(spec: &OptimizationSpec, catalogue: &Catalogue) -> PyResult<Problem> {
    prob::build_problem(&spec.inner, &catalogue.inner)
        .map(|inner| Problem { inner })
        .map_err(problem_err)
}

#[pyfunction]
fn generate_reference_points(objectives: usize, divisions: usize) -> Vec<Vec<f64>> {
    moea::generate_reference_points(objectives, divisions).points
}

#[pyfunction]
fn sanitize_identifier(id: &str) -> String {
    doml::sanitize_identifier(id)
}

/// Runs the whole pipeline on DOML text and returns the annotated document.
#[pyfunction]
#[pyo3(signature = (
    doml_text,
    catalogue,
    *,
    seed = moea::DEFAULT_SEED,
    algorithm = None,
    population = None,
    generations = None,
    max_solutions = orchestrator::DEFAULT_MAX_SOLUTIONS,
    brute_force = false,
    cost_unit = doml::DEFAULT_COST_UNIT,
))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    py: Python<'_>,
    doml_text: &str,
    catalogue: &Catalogue,
    seed: u64,
    algorithm: Option<&str>,
    population: Option<usize>,
    generations: Option<usize>,
    max_solutions: usize,
    brute_force: bool,
    cost_unit: &str,
) -> PyResult<OptimizeResult> {
    let options = OptimizeOptions {
        algorithm: algorithm_arg(algorithm)?,
        population_size: population,
        generations,
        seed,
        max_solutions,
        brute_force,
        emit: doml::EmitOptions {
            cost_unit: cost_unit.to_string(),
            ..doml::EmitOptions::default()
        },
        ..OptimizeOptions::default()
    };
    let cat = &catalogue.inner;
    let out = py
        .detach(|| orchestrator::optimize(doml_text, cat, &options))
        .map_err(optimize_err)?;
    Ok(OptimizeResult {
        report: RunReport::from(&out.report),
        solutions: out
            .solutions
            .iter()
            .zip(&out.records)
            .map(|(r, rec)| RankedSolution {
                name: r.name.clone(),
                active: r.active,
                decisions: rec.decisions.clone(),
                objective_values: r.solution.objective_values.clone(),
            })
            .collect(),
        text: out.text,
    })
}

#[pymodule]
#[pyo3(name = "iacopt")]
fn iacopt_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<Catalogue>()?;
    m.add_class::<OptimizationSpec>()?;
    m.add_class::<Document>()?;
    m.add_class::<Problem>()?;
    m.add_class::<Solution>()?;
    m.add_class::<RunReport>()?;
    m.add_class::<RankedSolution>()?;
    m.add_class::<OptimizeResult>()?;
    m.add_function(wrap_pyfunction!(parse_document, m)?)?;
    m.add_function(wrap_pyfunction!(read_input_archive, m)?)?;
    m.add_function(wrap_pyfunction!(build_problem, m)?)?;
    m.add_function(wrap_pyfunction!(generate_reference_points, m)?)?;
    m.add_function(wrap_pyfunction!(sanitize_identifier, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add("IacoptError", py.get_type::<IacoptError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("CatalogueError", py.get_type::<CatalogueError>())?;
    m.add("ProblemError", py.get_type::<ProblemError>())?;
    m.add("InfeasibleError", py.get_type::<InfeasibleError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
