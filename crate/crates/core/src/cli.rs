//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::catalogue::load_catalogue;
use crate::doml::{read_input_archive, EmitError, EmitOptions, DEFAULT_COST_UNIT};
use crate::moea::{Algorithm, MoeaError, DEFAULT_SEED};
use crate::oracle::OracleError;
use crate::orchestrator::{optimize, OptimizeError, OptimizeOptions, DEFAULT_MAX_SOLUTIONS};
use crate::problem::ProblemError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_CATALOGUE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "iacopt", version, about = "Optimize IaC deployment configurations described in DOML")]
struct Cli {
    /// -v for info, -vv for debug logging
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize a DOML document against a catalogue
    Optimize(OptimizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmChoice {
    Auto,
    Nsga2,
    Nsga3,
}

impl AlgorithmChoice {
    pub fn resolve(self) -> Option<Algorithm> {
        match self {
            AlgorithmChoice::Auto => None,
            AlgorithmChoice::Nsga2 => Some(Algorithm::Nsga2),
            AlgorithmChoice::Nsga3 => Some(Algorithm::Nsga3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedChoice {
    Fixed(u64),
    Random,
}

impl FromStr for SeedChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(SeedChoice::Random);
        }
        s.parse::<u64>()
            .map(SeedChoice::Fixed)
            .map_err(|_| format!("expected an unsigned integer or `random`, got `{s}`"))
    }
}

#[derive(Debug, Clone, Args)]
struct OptimizeArgs {
    /// DOML document, plain text or a ZIP holding one .doml entry
    #[arg(long)]
    input: PathBuf,
    /// Catalogue JSON file
    #[arg(long)]
    catalogue: PathBuf,
    /// Output path [default: <input stem>.out.doml next to the input]
    #[arg(long)]
    output: Option<PathBuf>,
    /// Random seed, or `random` for an entropy-derived seed
    #[arg(long, default_value_t = SeedChoice::Fixed(DEFAULT_SEED).to_string())]
    seed: String,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Crossover probability
    #[arg(long)]
    crossover: Option<f64>,
    /// Per-gene mutation probability
    #[arg(long)]
    mutation: Option<f64>,
    #[arg(long, value_enum, default_value_t = AlgorithmChoice::Auto)]
    algorithm: AlgorithmChoice,
    #[arg(long, default_value_t = DEFAULT_MAX_SOLUTIONS)]
    max_solutions: usize,
    /// Enumerate the whole search space instead of evolving
    #[arg(long)]
    brute_force: bool,
    #[arg(long, default_value = DEFAULT_COST_UNIT)]
    cost_unit: String,
}

impl std::fmt::Display for SeedChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedChoice::Fixed(s) => write!(f, "{s}"),
            SeedChoice::Random => f.write_str("random"),
        }
    }
}

/// Resolved settings for one `optimize` invocation.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub input: PathBuf,
    pub catalogue: PathBuf,
    pub output: PathBuf,
    pub seed: SeedChoice,
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub crossover: Option<f64>,
    pub mutation: Option<f64>,
    pub algorithm: AlgorithmChoice,
    pub max_solutions: usize,
    pub cost_unit: String,
    pub brute_force: bool,
    pub verbosity: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    /// Single-line `ERROR(<code>): message` form.
    pub fn line(&self) -> String {
        let flat: Vec<&str> = self.message.split_whitespace().collect();
        format!("ERROR({}): {}", self.code, flat.join(" "))
    }
}

/// `<dir>/<stem>.out.doml` for an input at `<dir>/<stem>.<ext>`.
pub fn default_output_path(input: &Path) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    input.with_file_name(format!("{stem}.out.doml"))
}

impl CliConfig {
    fn from_args(args: OptimizeArgs, verbosity: u8) -> Result<Self, CliError> {
        let seed = SeedChoice::from_str(&args.seed).map_err(|e| CliError::new(EXIT_USAGE, format!("--seed: {e}")))?;
        if args.max_solutions == 0 {
            return Err(CliError::new(EXIT_USAGE, "--max-solutions must be at least 1"));
        }
        if args.input.as_os_str().is_empty() || args.catalogue.as_os_str().is_empty() {
            return Err(CliError::new(EXIT_USAGE, "input and catalogue paths must be non-empty"));
        }
        if args.cost_unit.trim().is_empty() {
            return Err(CliError::new(EXIT_USAGE, "--cost-unit must be non-empty"));
        }
        let output = match args.output {
            Some(p) if p.as_os_str().is_empty() => {
                return Err(CliError::new(EXIT_USAGE, "--output must be non-empty"))
            }
            Some(p) => p,
            None => default_output_path(&args.input),
        };
        Ok(CliConfig {
            input: args.input,
            catalogue: args.catalogue,
            output,
            seed,
            population: args.population,
            generations: args.generations,
            crossover: args.crossover,
            mutation: args.mutation,
            algorithm: args.algorithm,
            max_solutions: args.max_solutions,
            cost_unit: args.cost_unit,
            brute_force: args.brute_force,
            verbosity,
        })
    }

    pub fn options(&self) -> OptimizeOptions {
        let seed = match self.seed {
            SeedChoice::Fixed(s) => s,
            SeedChoice::Random => rand::random(),
        };
        OptimizeOptions {
            algorithm: self.algorithm.resolve(),
            population_size: self.population,
            generations: self.generations,
            crossover_prob: self.crossover,
            mutation_prob_per_gene: self.mutation,
            seed,
            max_solutions: self.max_solutions,
            brute_force: self.brute_force,
            emit: EmitOptions {
                cost_unit: self.cost_unit.clone(),
                ..EmitOptions::default()
            },
            ..OptimizeOptions::default()
        }
    }
}

fn exit_code(err: &OptimizeError) -> i32 {
    match err {
        OptimizeError::Parse(_)
        | OptimizeError::NoOptimizationLayer
        | OptimizeError::NoObjectives
        | OptimizeError::InvalidOptions(_) => EXIT_USAGE,
        OptimizeError::Infeasible(_) => EXIT_INFEASIBLE,
        OptimizeError::Problem(ProblemError::NoCandidates { .. }) => EXIT_INFEASIBLE,
        OptimizeError::Problem(_) => EXIT_USAGE,
        OptimizeError::Search(MoeaError::InvalidParams(_)) => EXIT_USAGE,
        OptimizeError::Search(_) => EXIT_INTERNAL,
        OptimizeError::Oracle(OracleError::BudgetExceeded { .. } | OracleError::ZeroBudget) => EXIT_USAGE,
        OptimizeError::Oracle(_) => EXIT_INTERNAL,
        OptimizeError::Emit(EmitError::NameClash(_) | EmitError::InvalidUnit { .. }) => EXIT_USAGE,
        OptimizeError::Emit(_) => EXIT_INTERNAL,
    }
}

/// Runs one configured invocation and returns the path written.
pub fn execute(config: &CliConfig) -> Result<PathBuf, CliError> {
    let text = read_input_archive(&config.input).map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))?;
    let catalogue = load_catalogue(&config.catalogue).map_err(|e| CliError::new(EXIT_CATALOGUE, e.to_string()))?;
    let options = config.options();
    log::info!("seed {}", options.seed);
    match optimize(&text, &catalogue, &options) {
        Ok(out) => {
            for w in &out.report.warnings {
                log::warn!("{w}");
            }
            std::fs::write(&config.output, &out.text).map_err(|e| {
                CliError::new(EXIT_INTERNAL, format!("cannot write {}: {e}", config.output.display()))
            })?;
            eprintln!("{}", out.report);
            eprintln!("wrote {}", config.output.display());
            Ok(config.output.clone())
        }
        Err(OptimizeError::Infeasible(info)) => {
            eprintln!("{}", info.report);
            Err(CliError::new(EXIT_INFEASIBLE, info.to_string()))
        }
        Err(e) => Err(CliError::new(exit_code(&e), e.to_string())),
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

/// Parses `argv` (program name first), runs, and returns the process exit code.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            let err = CliError::new(EXIT_USAGE, e.kind().to_string());
            let _ = e.print();
            eprintln!("{}", err.line());
            return EXIT_USAGE;
        }
    };
    init_logging(cli.verbose);
    let Command::Optimize(args) = cli.command;
    let result = CliConfig::from_args(args, cli.verbose).and_then(|c| execute(&c));
    match result {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.line());
            e.code
        }
    }
}
