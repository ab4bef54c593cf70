//! Typed representation of the supported DOML layers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the three optimizable aggregate properties of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Cost,
    Performance,
    Availability,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Cost, Objective::Performance, Objective::Availability];

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Cost => "cost",
            Objective::Performance => "performance",
            Objective::Availability => "availability",
        }
    }

    /// Fraction digits used when printing values in solution blocks.
    pub fn max_fraction_digits(self) -> usize {
        match self {
            Objective::Performance => 1,
            Objective::Cost | Objective::Availability => 2,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cost" => Ok(Objective::Cost),
            "performance" => Ok(Objective::Performance),
            "availability" => Ok(Objective::Availability),
            other => Err(format!(
                "unknown objective `{other}` (expected cost, performance or availability)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Min => "min",
            Direction::Max => "max",
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(Direction::Min),
            "max" => Ok(Direction::Max),
            other => Err(format!("unknown direction `{other}` (expected min or max)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub name: Objective,
    pub direction: Direction,
}

impl ObjectiveSpec {
    pub fn new(name: Objective, direction: Direction) -> Self {
        Self { name, direction }
    }
}

/// Property a requirement refers to. Anything unrecognised is kept as `Other`
/// so the document still parses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    Cost,
    Availability,
    Performance,
    Provider,
    Region,
    Other(String),
}

impl Target {
    pub fn parse(s: &str) -> Target {
        match s {
            "cost" => Target::Cost,
            "availability" => Target::Availability,
            "performance" => Target::Performance,
            "provider" => Target::Provider,
            "region" => Target::Region,
            other => Target::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Target::Cost => "cost",
            Target::Availability => "availability",
            Target::Performance => "performance",
            Target::Provider => "provider",
            Target::Region => "region",
            Target::Other(s) => s,
        }
    }

    /// The aggregate objective this property denotes, if any.
    pub fn metric(&self) -> Option<Objective> {
        match self {
            Target::Cost => Some(Objective::Cost),
            Target::Availability => Some(Objective::Availability),
            Target::Performance => Some(Objective::Performance),
            _ => None,
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, Target::Provider | Target::Region)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// Upper bound: value must not exceed the threshold.
    Max,
    /// Lower bound: value must reach the threshold.
    Min,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Max => "max",
            BoundKind::Min => "min",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateBound {
    pub id: String,
    pub description: String,
    pub kind: BoundKind,
    pub threshold: f64,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalMatch {
    pub id: String,
    pub description: String,
    pub allowed: Vec<String>,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyValue {
    pub id: String,
    pub key: String,
    pub value: String,
}

pub const ELEMENTS_KEY: &str = "elements";
pub const MAX_VM_MEMORY_KEY: &str = "max_VM_memory";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Requirement {
    Bound(AggregateBound),
    Categorical(CategoricalMatch),
    KeyValue(KeyValue),
}

impl Requirement {
    pub fn id(&self) -> &str {
        match self {
            Requirement::Bound(b) => &b.id,
            Requirement::Categorical(c) => &c.id,
            Requirement::KeyValue(kv) => &kv.id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub objective: Objective,
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub name: String,
    pub objective_values: Vec<ObjectiveValue>,
    pub decisions: Vec<String>,
}

/// The optimization layer: objectives, requirements and any solution blocks
/// already present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSpec {
    pub name: String,
    pub objectives: Vec<ObjectiveSpec>,
    pub requirements: Vec<Requirement>,
    /// Index into `objectives`; always the first declared objective.
    pub priority: usize,
    pub solutions: Vec<SolutionRecord>,
}

impl OptimizationSpec {
    pub fn priority_objective(&self) -> ObjectiveSpec {
        self.objectives[self.priority]
    }

    /// Comma-separated slot list of the `elements` requirement, if present.
    pub fn elements_value(&self) -> Option<&str> {
        self.key_value(ELEMENTS_KEY)
    }

    pub fn max_vm_memory(&self) -> Option<f64> {
        self.key_value(MAX_VM_MEMORY_KEY)
            .and_then(|v| v.trim().parse::<f64>().ok())
    }

    pub fn key_value(&self, key: &str) -> Option<&str> {
        self.requirements.iter().find_map(|r| match r {
            Requirement::KeyValue(kv) if kv.key == key => Some(kv.value.as_str()),
            _ => None,
        })
    }

    pub fn bounds(&self) -> impl Iterator<Item = &AggregateBound> {
        self.requirements.iter().filter_map(|r| match r {
            Requirement::Bound(b) => Some(b),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subnet {
    pub name: String,
    pub cidr: String,
    pub connections: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub name: String,
    pub cidr: String,
    pub protocol: String,
    pub subnets: Vec<Subnet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iface {
    pub name: String,
    pub subnet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractVm {
    pub name: String,
    pub os: String,
    pub ifaces: Vec<Iface>,
    pub storage_gb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmImage {
    pub name: String,
    pub generates: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoscaleGroup {
    pub name: String,
    pub vm: AbstractVm,
    pub min: u64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InfrastructureModel {
    pub name: String,
    pub networks: Vec<Network>,
    pub vms: Vec<AbstractVm>,
    pub vm_images: Vec<VmImage>,
    pub autoscale_groups: Vec<AutoscaleGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PropertyValue {
    Text(String),
    /// A number printed with a fixed count of fraction digits.
    Number { value: f64, decimals: usize },
}

impl PropertyValue {
    pub fn text(s: impl Into<String>) -> Self {
        PropertyValue::Text(s.into())
    }

    pub fn number(value: f64, decimals: usize) -> Self {
        PropertyValue::Number { value, decimals }
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::Text(s) => write!(f, "\"{}\"", super::emit::escape(s)),
            PropertyValue::Number { value, decimals } => write!(f, "{value:.decimals$}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Property {
    pub key: String,
    pub value: PropertyValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteStorage {
    pub name: String,
    pub properties: Vec<Property>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderBlock {
    pub provider: String,
    pub storages: Vec<ConcreteStorage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteVm {
    pub name: String,
    pub properties: Vec<Property>,
    pub maps: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteNet {
    pub name: String,
    pub maps: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteImage {
    pub name: String,
    pub image_name: String,
    pub maps: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteAsg {
    pub name: String,
    pub properties: Vec<Property>,
    pub maps: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConcreteInfrastructure {
    pub name: String,
    pub provider_blocks: Vec<ProviderBlock>,
    pub vms: Vec<ConcreteVm>,
    pub nets: Vec<ConcreteNet>,
    pub images: Vec<ConcreteImage>,
    pub asgs: Vec<ConcreteAsg>,
}

/// A top-level block this parser does not model, kept verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBlock {
    pub keyword: String,
    pub name: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Block {
    Optimization(OptimizationSpec),
    Infrastructure(InfrastructureModel),
    Concrete(ConcreteInfrastructure),
    Other(RawBlock),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

/// A parsed DOML document. `blocks` keeps source order.
#[derive(Debug, Clone, Default)]
pub struct Document {
    pub blocks: Vec<Block>,
    pub warnings: Vec<Warning>,
    /// Where solution blocks are spliced into the source, and whether the
    /// splice needs a leading newline.
    pub(crate) optimization_insert_at: Option<(usize, bool)>,
}

impl Document {
    /// A document holding `blocks` with no source text attached; solutions
    /// can only be spliced into documents produced by the parser.
    pub fn new(blocks: Vec<Block>) -> Self {
        Document {
            blocks,
            ..Document::default()
        }
    }

    pub fn optimization(&self) -> Option<&OptimizationSpec> {
        self.blocks.iter().find_map(|b| match b {
            Block::Optimization(o) => Some(o),
            _ => None,
        })
    }

    pub fn infrastructure(&self) -> Option<&InfrastructureModel> {
        self.blocks.iter().find_map(|b| match b {
            Block::Infrastructure(i) => Some(i),
            _ => None,
        })
    }

    pub fn concretizations(&self) -> impl Iterator<Item = &ConcreteInfrastructure> {
        self.blocks.iter().filter_map(|b| match b {
            Block::Concrete(c) => Some(c),
            _ => None,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}
