//! Text emission for solution blocks, concretization blocks and whole documents.

use std::fmt::Write as _;

use super::error::EmitError;
use super::lexer::UNIT_SYMBOLS;
use super::model::*;
use crate::catalogue::{Catalogue, CatalogueElement, ElementType};

pub const DEFAULT_COST_UNIT: &str = "euro";
pub const DEFAULT_IMAGE: &str = "default-image";

#[derive(Debug, Clone, PartialEq)]
pub struct EmitOptions {
    /// Unit label printed after cost values.
    pub cost_unit: String,
    /// Image name used when the catalogue has none for the chosen provider.
    pub default_image: String,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            cost_unit: DEFAULT_COST_UNIT.to_string(),
            default_image: DEFAULT_IMAGE.to_string(),
        }
    }
}

impl EmitOptions {
    pub fn unit_for(&self, objective: Objective) -> &str {
        match objective {
            Objective::Cost => &self.cost_unit,
            Objective::Availability => "%",
            Objective::Performance => "metric",
        }
    }
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// Replaces every character outside `[A-Za-z0-9_]` with `_`; a leading digit
/// gets a `_` prefix so the result is always a valid identifier.
pub fn sanitize_identifier(id: &str) -> String {
    let mut out: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

/// Rounds to at most `max_digits` fraction digits, then drops trailing zeros
/// while keeping at least one (`8.0`, `97.5`, `230.53`).
pub fn format_objective_value(value: f64, max_digits: usize) -> String {
    let mut s = format!("{value:.max_digits$}");
    if max_digits == 0 {
        s.push_str(".0");
        return s;
    }
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    if s == "-0.0" {
        s = "0.0".into();
    }
    s
}

/// Fewest fraction digits that print `value` back exactly (`97`, `97.5`).
pub fn minimal_decimals(value: f64) -> usize {
    (0..=17)
        .find(|&d| format!("{value:.d$}").parse::<f64>().ok() == Some(value))
        .unwrap_or(17)
}

/// Positional notation with at least one fraction digit (`300.0`, `0.0001`).
fn format_threshold(value: f64) -> String {
    let d = minimal_decimals(value).max(1);
    format!("{value:.d$}")
}

fn format_minimal(value: f64) -> String {
    let d = minimal_decimals(value);
    format!("{value:.d$}")
}

fn valid_unit(unit: &str) -> bool {
    let mut chars = unit.chars();
    match (chars.next(), chars.clone().next()) {
        (Some(c), None) if UNIT_SYMBOLS.contains(&c) => true,
        (Some(c), _) if c.is_ascii_alphabetic() || c == '_' => {
            unit.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        }
        _ => false,
    }
}

fn check_solution(spec: &OptimizationSpec, sol: &SolutionRecord) -> Result<(), EmitError> {
    if sol.objective_values.len() != spec.objectives.len() {
        return Err(EmitError::ObjectiveCountMismatch {
            name: sol.name.clone(),
            expected: spec.objectives.len(),
            got: sol.objective_values.len(),
        });
    }
    for (declared, value) in spec.objectives.iter().zip(&sol.objective_values) {
        if declared.name != value.objective {
            return Err(EmitError::ObjectiveMismatch {
                name: sol.name.clone(),
                expected: declared.name.to_string(),
                got: value.objective.to_string(),
            });
        }
        if !valid_unit(&value.unit) {
            return Err(EmitError::InvalidUnit(value.unit.clone()));
        }
    }
    Ok(())
}

pub fn render_solution(sol: &SolutionRecord, indent: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{indent}solution {} {{", sol.name);
    let _ = writeln!(s, "{indent}  objectives {{");
    for v in &sol.objective_values {
        let _ = writeln!(
            s,
            "{indent}    {} {} {}",
            v.objective,
            format_objective_value(v.value, v.objective.max_fraction_digits()),
            v.unit
        );
    }
    let _ = writeln!(s, "{indent}  }}");
    let decisions: Vec<String> = sol.decisions.iter().map(|d| format!("\"{}\"", escape(d))).collect();
    let _ = writeln!(s, "{indent}  decisions [{}]", decisions.join(", "));
    let _ = writeln!(s, "{indent}}}");
    s
}

/// Inserts solution blocks into the optimization layer of `source`, leaving
/// the rest of the text untouched. An empty list returns `source` unchanged.
pub fn emit_solutions(
    source: &str,
    doc: &Document,
    solutions: &[SolutionRecord],
) -> Result<String, EmitError> {
    if solutions.is_empty() {
        return Ok(source.to_string());
    }
    let spec = doc.optimization().ok_or(EmitError::NoOptimizationLayer)?;
    let (at, needs_newline) = doc.optimization_insert_at.ok_or(EmitError::NoOptimizationLayer)?;
    for sol in solutions {
        check_solution(spec, sol)?;
        if spec.solutions.iter().any(|s| s.name == sol.name) {
            return Err(EmitError::NameClash(sol.name.clone()));
        }
    }
    let mut block = String::new();
    if needs_newline {
        block.push('\n');
    }
    for sol in solutions {
        block.push_str(&render_solution(sol, "  "));
    }
    let mut out = String::with_capacity(source.len() + block.len());
    out.push_str(&source[..at]);
    out.push_str(&block);
    out.push_str(&source[at..]);
    Ok(out)
}

/// Result of mapping one solution onto the infrastructure layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Concretization {
    pub block: ConcreteInfrastructure,
    pub warnings: Vec<String>,
}

fn storage_properties(el: &CatalogueElement) -> Vec<Property> {
    let name = sanitize_identifier(&el.id);
    vec![
        Property { key: "st_flavor".into(), value: PropertyValue::text(&name) },
        Property { key: "st_name".into(), value: PropertyValue::text(&name) },
        Property { key: "st_Availability".into(), value: minimal_number(el.availability) },
        Property { key: "st_Cost_Currency".into(), value: PropertyValue::number(el.cost, 2) },
        Property {
            key: "st_Request_Response_time_Storage_Performance".into(),
            value: minimal_number(el.performance),
        },
        Property { key: "st_provider_OU".into(), value: PropertyValue::text(&el.provider) },
    ]
}

fn vm_properties(el: &CatalogueElement) -> Vec<Property> {
    let name = sanitize_identifier(&el.id);
    let mut props = vec![
        Property { key: "vm_flavor".into(), value: PropertyValue::text(&name) },
        Property { key: "vm_name".into(), value: PropertyValue::text(&name) },
        Property { key: "vm_Availability".into(), value: minimal_number(el.availability) },
        Property {
            key: "vm_Response_time_Virtual_Machine_Performance".into(),
            value: minimal_number(el.performance),
        },
    ];
    if let Some(mem) = el.memory_gb {
        props.push(Property { key: "vm_Memory".into(), value: minimal_number(mem) });
    }
    props.push(Property { key: "vm_provider_OU".into(), value: PropertyValue::text(&el.provider) });
    props.push(Property { key: "vm_Cost_Currency".into(), value: PropertyValue::number(el.cost, 2) });
    props
}

fn minimal_number(v: f64) -> PropertyValue {
    PropertyValue::number(v, minimal_decimals(v))
}

/// Builds the `opt_infra<index>` block for one solution's decisions.
pub fn concretize(
    index: usize,
    decisions: &[String],
    model: &InfrastructureModel,
    catalogue: &Catalogue,
    opts: &EmitOptions,
) -> Result<Concretization, EmitError> {
    let chosen: Vec<&CatalogueElement> = decisions
        .iter()
        .map(|id| catalogue.get(id).ok_or_else(|| EmitError::UnknownElement(id.clone())))
        .collect::<Result<_, _>>()?;
    let mut warnings = Vec::new();
    let name = format!("opt_infra{index}");
    let mut block = ConcreteInfrastructure {
        name: name.clone(),
        ..Default::default()
    };

    for el in chosen.iter().filter(|e| e.element_type == ElementType::Storage) {
        let storage = ConcreteStorage {
            name: sanitize_identifier(&el.id),
            properties: storage_properties(el),
        };
        let provider = sanitize_identifier(&el.provider);
        match block.provider_blocks.iter_mut().find(|p| p.provider == provider) {
            Some(p) => p.storages.push(storage),
            None => block.provider_blocks.push(ProviderBlock {
                provider,
                storages: vec![storage],
            }),
        }
    }

    let vms: Vec<&CatalogueElement> =
        chosen.iter().copied().filter(|e| e.element_type == ElementType::Vm).collect();
    for (el, abstract_vm) in vms.iter().zip(&model.vms) {
        block.vms.push(ConcreteVm {
            name: sanitize_identifier(&el.id),
            properties: vm_properties(el),
            maps: abstract_vm.name.clone(),
        });
    }
    if vms.len() > model.vms.len() {
        let extra: Vec<&str> = vms[model.vms.len()..].iter().map(|e| e.id.as_str()).collect();
        warnings.push(format!(
            "{name}: {} chosen VMs but only {} abstract VMs declared; unmapped: {}",
            vms.len(),
            model.vms.len(),
            extra.join(", ")
        ));
    }

    for net in &model.networks {
        block.nets.push(ConcreteNet {
            name: format!("opt_network_{}", net.name),
            maps: net.name.clone(),
        });
    }

    let image_provider = vms.first().or(chosen.first()).map(|e| e.provider.as_str());
    for img in &model.vm_images {
        let image_name = match image_provider.and_then(|p| catalogue.lookup_image(p)) {
            Some(found) => found.to_string(),
            None => {
                warnings.push(format!(
                    "{name}: no vm image for provider `{}`, using `{}`",
                    image_provider.unwrap_or("<none>"),
                    opts.default_image
                ));
                opts.default_image.clone()
            }
        };
        block.images.push(ConcreteImage {
            name: format!("concrete_{}", img.name),
            image_name,
            maps: img.name.clone(),
        });
    }

    if let Some(vm) = vms.first() {
        let flavor = sanitize_identifier(&vm.id);
        for asg in &model.autoscale_groups {
            block.asgs.push(ConcreteAsg {
                name: format!("concrete_{}", asg.name),
                properties: vec![
                    Property { key: "vm_flavor".into(), value: PropertyValue::text(&flavor) },
                    Property { key: "vm_name".into(), value: PropertyValue::text(&flavor) },
                ],
                maps: asg.name.clone(),
            });
        }
    }

    Ok(Concretization { block, warnings })
}

/// Renders one `concrete_infrastructure` block per solution, in rank order.
pub fn emit_concretization(
    solutions: &[SolutionRecord],
    model: &InfrastructureModel,
    catalogue: &Catalogue,
    opts: &EmitOptions,
) -> Result<(String, Vec<String>), EmitError> {
    let mut text = String::new();
    let mut warnings = Vec::new();
    for (k, sol) in solutions.iter().enumerate() {
        let c = concretize(k + 1, &sol.decisions, model, catalogue, opts)?;
        if k > 0 {
            text.push('\n');
        }
        text.push_str(&render_concrete(&c.block));
        warnings.extend(c.warnings);
    }
    Ok((text, warnings))
}

fn render_properties(s: &mut String, props: &[Property], indent: &str) {
    let _ = writeln!(s, "{indent}properties {{");
    for p in props {
        let _ = writeln!(s, "{indent}  {} = {}", p.key, p.value);
    }
    let _ = writeln!(s, "{indent}}}");
}

pub fn render_concrete(ci: &ConcreteInfrastructure) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "concrete_infrastructure {} {{", ci.name);
    for p in &ci.provider_blocks {
        let _ = writeln!(s, "  provider {} {{", p.provider);
        for st in &p.storages {
            let _ = writeln!(s, "    storage {} {{", st.name);
            render_properties(&mut s, &st.properties, "      ");
            let _ = writeln!(s, "    }}");
        }
        let _ = writeln!(s, "  }}");
    }
    for vm in &ci.vms {
        let _ = writeln!(s, "  vm {} {{", vm.name);
        render_properties(&mut s, &vm.properties, "    ");
        let _ = writeln!(s, "    maps {}", vm.maps);
        let _ = writeln!(s, "  }}");
    }
    for net in &ci.nets {
        let _ = writeln!(s, "  net {} {{", net.name);
        let _ = writeln!(s, "    maps {}", net.maps);
        let _ = writeln!(s, "  }}");
    }
    for img in &ci.images {
        let _ = writeln!(s, "  vm_image {} {{", img.name);
        let _ = writeln!(s, "    image_name \"{}\"", escape(&img.image_name));
        let _ = writeln!(s, "    maps {}", img.maps);
        let _ = writeln!(s, "  }}");
    }
    for asg in &ci.asgs {
        let _ = writeln!(s, "  autoscale_group {} {{", asg.name);
        render_properties(&mut s, &asg.properties, "    ");
        let _ = writeln!(s, "    maps {}", asg.maps);
        let _ = writeln!(s, "  }}");
    }
    let _ = writeln!(s, "}}");
    s
}

pub fn render_optimization(spec: &OptimizationSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "optimization {} {{", spec.name);
    let _ = writeln!(s, "  objectives {{");
    for o in &spec.objectives {
        let _ = writeln!(s, "    \"{}\" => {}", o.name, o.direction.as_str());
    }
    let _ = writeln!(s, "  }}");
    let _ = writeln!(s, "  nonfunctional_requirements {{");
    for r in &spec.requirements {
        let line = match r {
            Requirement::Bound(b) => format!(
                "{} \"{}\" {} {} => \"{}\"",
                b.id,
                escape(&b.description),
                b.kind.as_str(),
                format_threshold(b.threshold),
                escape(b.target.as_str())
            ),
            Requirement::Categorical(c) => format!(
                "{} \"{}\" values \"{}\" => \"{}\"",
                c.id,
                escape(&c.description),
                escape(&c.allowed.join(", ")),
                escape(c.target.as_str())
            ),
            Requirement::KeyValue(kv) => {
                format!("{} \"{}\" => \"{}\"", kv.id, escape(&kv.key), escape(&kv.value))
            }
        };
        let _ = writeln!(s, "    {line}");
    }
    let _ = writeln!(s, "  }}");
    for sol in &spec.solutions {
        s.push_str(&render_solution(sol, "  "));
    }
    let _ = writeln!(s, "}}");
    s
}

fn render_vm(s: &mut String, vm: &AbstractVm, indent: &str) {
    let _ = writeln!(s, "{indent}vm {} {{", vm.name);
    if !vm.os.is_empty() {
        let _ = writeln!(s, "{indent}  os \"{}\"", escape(&vm.os));
    }
    for iface in &vm.ifaces {
        let _ = writeln!(s, "{indent}  iface {} {{", iface.name);
        let _ = writeln!(s, "{indent}    belongs_to {}", iface.subnet);
        let _ = writeln!(s, "{indent}  }}");
    }
    if let Some(sto) = vm.storage_gb {
        let _ = writeln!(s, "{indent}  sto \"{}\"", format_minimal(sto));
    }
    let _ = writeln!(s, "{indent}}}");
}

pub fn render_infrastructure(model: &InfrastructureModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "infrastructure {} {{", model.name);
    for net in &model.networks {
        let _ = writeln!(s, "  net {} {{", net.name);
        if !net.cidr.is_empty() {
            let _ = writeln!(s, "    cidr \"{}\"", escape(&net.cidr));
        }
        if !net.protocol.is_empty() {
            let _ = writeln!(s, "    protocol \"{}\"", escape(&net.protocol));
        }
        for sub in &net.subnets {
            let _ = writeln!(s, "    subnet {} {{", sub.name);
            if !sub.cidr.is_empty() {
                let _ = writeln!(s, "      cidr \"{}\"", escape(&sub.cidr));
            }
            let _ = writeln!(s, "      connections {{ {} }}", sub.connections.join(" "));
            let _ = writeln!(s, "    }}");
        }
        let _ = writeln!(s, "  }}");
    }
    for vm in &model.vms {
        render_vm(&mut s, vm, "  ");
    }
    for img in &model.vm_images {
        let _ = writeln!(s, "  vm_image {} {{", img.name);
        let _ = writeln!(s, "    generates {}", img.generates);
        let _ = writeln!(s, "  }}");
    }
    for asg in &model.autoscale_groups {
        let _ = writeln!(s, "  autoscale_group {} {{", asg.name);
        render_vm(&mut s, &asg.vm, "    ");
        let _ = writeln!(s, "    min {}", asg.min);
        let _ = writeln!(s, "    max {}", asg.max);
        let _ = writeln!(s, "  }}");
    }
    let _ = writeln!(s, "}}");
    s
}

/// Canonical rendering of a parsed document. Unknown blocks are copied verbatim.
pub fn emit_document(doc: &Document) -> String {
    let parts: Vec<String> = doc
        .blocks
        .iter()
        .map(|b| match b {
            Block::Optimization(o) => render_optimization(o),
            Block::Infrastructure(i) => render_infrastructure(i),
            Block::Concrete(c) => render_concrete(c),
            Block::Other(raw) => format!("{}\n", raw.text),
        })
        .collect();
    parts.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_never_use_exponents() {
        assert_eq!(format_threshold(300.0), "300.0");
        assert_eq!(format_threshold(97.25), "97.25");
        assert_eq!(format_threshold(1e17), "100000000000000000.0");
        assert_eq!(format_threshold(1e-7), "0.0000001");
    }

    #[test]
    fn sanitize_examples() {
        assert_eq!(sanitize_identifier("t2.nano"), "t2_nano");
        assert_eq!(sanitize_identifier("StandardStorage1_Europe"), "StandardStorage1_Europe");
        assert_eq!(sanitize_identifier("m5-large/x"), "m5_large_x");
        assert_eq!(sanitize_identifier("2xl"), "_2xl");
        assert_eq!(sanitize_identifier(""), "_");
    }

    #[test]
    fn objective_value_formatting() {
        assert_eq!(format_objective_value(230.53, 2), "230.53");
        assert_eq!(format_objective_value(97.5, 2), "97.5");
        assert_eq!(format_objective_value(8.0, 1), "8.0");
        assert_eq!(format_objective_value(230.0, 2), "230.0");
        assert_eq!(format_objective_value(100.53 + 130.0, 2), "230.53");
        assert_eq!(format_objective_value(-0.001, 2), "0.0");
    }

    #[test]
    fn minimal_decimal_counts() {
        assert_eq!(minimal_decimals(97.0), 0);
        assert_eq!(minimal_decimals(97.5), 1);
        assert_eq!(minimal_decimals(100.53), 2);
        assert_eq!(format_minimal(1024.0), "1024");
    }

    #[test]
    fn unit_labels() {
        assert!(valid_unit("euro"));
        assert!(valid_unit("%"));
        assert!(valid_unit("$"));
        assert!(!valid_unit("US dollars"));
        assert!(!valid_unit(""));
        assert!(!valid_unit("%%"));
    }
}
