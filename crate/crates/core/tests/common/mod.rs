#![allow(dead_code)]

use std::path::PathBuf;

use iacopt::catalogue::{Catalogue, CatalogueElement, ElementType, VmImageEntry};
use iacopt::doml::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn reference_catalogue() -> Catalogue {
    iacopt::catalogue::load_catalogue(data_path("reference_catalogue.json")).expect("reference catalogue")
}

pub fn example_doml() -> String {
    std::fs::read_to_string(data_path("example.doml")).expect("example document")
}

pub fn optimization_only_doml() -> String {
    std::fs::read_to_string(data_path("fig2_optimization.doml")).expect("optimization fixture")
}

pub fn infrastructure_doml() -> String {
    std::fs::read_to_string(data_path("fig3_infrastructure.doml")).expect("infrastructure fixture")
}

pub fn cents(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> f64 {
    rng.gen_range(lo..=hi) as f64 / 100.0
}

/// A random instance with a known feasible genotype.
pub struct Instance {
    pub doml: String,
    pub catalogue: Catalogue,
    pub slots: Vec<ElementType>,
    pub objectives: Vec<Objective>,
    pub space_size: u128,
}

pub const SYNTH_MAX_MEMORY: f64 = 64.0;

fn element(rng: &mut ChaCha8Rng, id: String, ty: ElementType, provider: &str) -> CatalogueElement {
    CatalogueElement {
        id,
        element_type: ty,
        provider: provider.to_string(),
        region: "eu".to_string(),
        cost: cents(rng, 1_000, 20_000),
        availability: cents(rng, 9_000, 9_999),
        performance: rng.gen_range(10..=200) as f64 / 10.0,
        memory_gb: (ty == ElementType::Vm).then(|| rng.gen_range(1..=64) as f64),
    }
}

/// 2-3 slots, 2-3 objectives, search space of 20-500 valid combinations,
/// distractors filtered out by provider or memory, and bounds placed around
/// a randomly chosen reference configuration so at least one is feasible.
pub fn synthetic_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_slots = rng.gen_range(2..=3);
    let (slots, vm_count, st_count) = loop {
        let slots: Vec<ElementType> = (0..n_slots)
            .map(|_| if rng.gen_bool(0.5) { ElementType::Vm } else { ElementType::Storage })
            .collect();
        let vm_count = rng.gen_range(2..=12usize);
        let st_count = rng.gen_range(2..=12usize);
        let size: usize = slots
            .iter()
            .map(|t| if *t == ElementType::Vm { vm_count } else { st_count })
            .product();
        if (20..=500).contains(&size) {
            break (slots, vm_count, st_count);
        }
    };

    let mut elements = Vec::new();
    for i in 0..vm_count {
        elements.push(element(&mut rng, format!("vm{i}.s{seed}"), ElementType::Vm, "aws"));
    }
    for i in 0..st_count {
        elements.push(element(&mut rng, format!("st{i}-s{seed}"), ElementType::Storage, "aws"));
    }
    let mut bad_provider = element(&mut rng, format!("gvm-{seed}"), ElementType::Vm, "gcp");
    bad_provider.cost = 0.5;
    elements.push(bad_provider);
    let mut bad_st = element(&mut rng, format!("gst-{seed}"), ElementType::Storage, "azure");
    bad_st.cost = 0.5;
    elements.push(bad_st);
    let mut big = element(&mut rng, format!("big-{seed}"), ElementType::Vm, "aws");
    big.memory_gb = Some(SYNTH_MAX_MEMORY * 2.0);
    big.cost = 0.5;
    elements.push(big);
    elements.shuffle(&mut rng);

    let valid = |ty: ElementType| -> Vec<&CatalogueElement> {
        elements
            .iter()
            .filter(|e| e.element_type == ty && e.provider == "aws")
            .filter(|e| e.memory_gb.is_none_or(|m| m <= SYNTH_MAX_MEMORY))
            .collect()
    };
    let reference: Vec<&CatalogueElement> = slots
        .iter()
        .map(|&t| *valid(t).choose(&mut rng).expect("candidates"))
        .collect();
    let ref_cost: f64 = reference.iter().map(|e| e.cost).sum();
    let ref_avail: f64 = reference.iter().map(|e| e.availability).sum::<f64>() / reference.len() as f64;

    let mut objectives = Objective::ALL.to_vec();
    objectives.shuffle(&mut rng);
    objectives.truncate(rng.gen_range(2..=3));

    let mut reqs = Vec::new();
    if rng.gen_bool(0.7) {
        let t = (ref_cost * rng.gen_range(1.02..1.3) * 100.0).ceil() / 100.0;
        reqs.push(format!("c1 \"cost cap\" max {t:.2} => \"cost\""));
    }
    if rng.gen_bool(0.7) {
        let t = (ref_avail * rng.gen_range(0.97..0.995) * 100.0).floor() / 100.0;
        reqs.push(format!("a1 \"availability floor\" min {t:.2} => \"availability\""));
    }
    reqs.push("p1 \"Provider\" values \"aws\" => \"provider\"".to_string());
    reqs.push(format!("m1 \"max_VM_memory\" => \"{}\"", SYNTH_MAX_MEMORY));
    let slot_list: Vec<&str> = slots.iter().map(|t| t.as_str()).collect();
    reqs.push(format!("e1 \"elements\" => \"{}\"", slot_list.join(", ")));

    let mut doml = format!("optimization synth{seed} {{\n  objectives {{\n");
    for o in &objectives {
        let dir = if *o == Objective::Cost { "min" } else { "max" };
        doml.push_str(&format!("    \"{o}\" => {dir}\n"));
    }
    doml.push_str("  }\n  nonfunctional_requirements {\n");
    for r in &reqs {
        doml.push_str(&format!("    {r}\n"));
    }
    doml.push_str("  }\n}\n");

    let space_size = slots
        .iter()
        .map(|t| if *t == ElementType::Vm { vm_count as u128 } else { st_count as u128 })
        .product();
    Instance {
        doml,
        catalogue: Catalogue {
            elements,
            vm_images: vec![VmImageEntry {
                provider: "aws".into(),
                image_name: "ami-synthetic".into(),
            }],
        },
        slots,
        objectives,
        space_size,
    }
}

// ---- random documents for round-trip checks ----

fn name(rng: &mut ChaCha8Rng, prefix: &str, i: usize) -> String {
    format!("{prefix}{i}_{}", rng.gen_range(0..1000))
}

fn text(rng: &mut ChaCha8Rng) -> String {
    const PARTS: [&str; 8] = ["cost", " <= ", "quoted \"x\"", "back\\slash", "97%", "€", "tab\there", "plain"];
    (0..rng.gen_range(1..4)).map(|_| *PARTS.choose(rng).unwrap()).collect()
}

fn random_solution(rng: &mut ChaCha8Rng, idx: usize, objectives: &[ObjectiveSpec]) -> SolutionRecord {
    let units = ["euro", "$", "%", "metric", "usd"];
    SolutionRecord {
        name: format!("sol{}", idx + 1),
        objective_values: objectives
            .iter()
            .map(|o| {
                let value = match o.name.max_fraction_digits() {
                    1 => rng.gen_range(0..100_000) as f64 / 10.0,
                    _ => rng.gen_range(0..100_000) as f64 / 100.0,
                };
                ObjectiveValue {
                    objective: o.name,
                    value,
                    unit: units.choose(rng).unwrap().to_string(),
                }
            })
            .collect(),
        decisions: (0..rng.gen_range(1..4)).map(|i| format!("el{i}.x-{}", rng.gen_range(0..99))).collect(),
    }
}

fn random_optimization(rng: &mut ChaCha8Rng) -> OptimizationSpec {
    let mut objs = Objective::ALL.to_vec();
    objs.shuffle(rng);
    objs.truncate(rng.gen_range(1..=3));
    let objectives: Vec<ObjectiveSpec> = objs
        .into_iter()
        .map(|o| ObjectiveSpec::new(o, if rng.gen_bool(0.5) { Direction::Min } else { Direction::Max }))
        .collect();
    let mut requirements = Vec::new();
    for i in 0..rng.gen_range(0..4) {
        let target = [Target::Cost, Target::Availability, Target::Performance].choose(rng).unwrap().clone();
        requirements.push(Requirement::Bound(AggregateBound {
            id: format!("b{i}"),
            description: text(rng),
            kind: if rng.gen_bool(0.5) { BoundKind::Max } else { BoundKind::Min },
            threshold: rng.gen_range(-10_000..1_000_000) as f64 / 100.0,
            target,
        }));
    }
    if rng.gen_bool(0.7) {
        let allowed: Vec<String> = ["aws", "azure", "gcp"][..rng.gen_range(1..=3)].iter().map(|s| s.to_string()).collect();
        let target = if rng.gen_bool(0.5) { Target::Provider } else { Target::Region };
        requirements.push(Requirement::Categorical(CategoricalMatch {
            id: "cat1".into(),
            description: text(rng),
            allowed,
            target,
        }));
    }
    if rng.gen_bool(0.5) {
        requirements.push(Requirement::KeyValue(KeyValue {
            id: "mem".into(),
            key: MAX_VM_MEMORY_KEY.into(),
            value: rng.gen_range(1..4096).to_string(),
        }));
    }
    requirements.push(Requirement::KeyValue(KeyValue {
        id: "els".into(),
        key: ELEMENTS_KEY.into(),
        value: ["VM", "Storage", "VM, Storage", "Storage, VM, VM"].choose(rng).unwrap().to_string(),
    }));
    requirements.shuffle(rng);
    let solutions = (0..rng.gen_range(0..4)).map(|i| random_solution(rng, i, &objectives)).collect();
    OptimizationSpec {
        name: name(rng, "opt", 0),
        objectives,
        requirements,
        priority: 0,
        solutions,
    }
}

fn random_vm(rng: &mut ChaCha8Rng, vm_name: String, subnets: &[String]) -> AbstractVm {
    AbstractVm {
        name: vm_name,
        os: if rng.gen_bool(0.8) { ["Ubuntu", "Debian 12", "win \"srv\""].choose(rng).unwrap().to_string() } else { String::new() },
        ifaces: if subnets.is_empty() {
            vec![]
        } else {
            (0..rng.gen_range(0..3))
                .map(|i| Iface {
                    name: name(rng, "if", i),
                    subnet: subnets.choose(rng).unwrap().clone(),
                })
                .collect()
        },
        storage_gb: rng.gen_bool(0.5).then(|| [1024.0, 20.5, 8.0, 0.25].choose(rng).copied().unwrap()),
    }
}

fn random_infrastructure(rng: &mut ChaCha8Rng) -> InfrastructureModel {
    let networks: Vec<Network> = (0..rng.gen_range(0..3))
        .map(|n| {
            let subnet_names: Vec<String> = (0..rng.gen_range(0..3)).map(|i| name(rng, &format!("sn{n}x"), i)).collect();
            Network {
                name: name(rng, "net", n),
                cidr: if rng.gen_bool(0.8) { format!("10.{n}.0.0/16") } else { String::new() },
                protocol: if rng.gen_bool(0.8) { "TCP/IP".into() } else { String::new() },
                subnets: subnet_names
                    .iter()
                    .map(|s| Subnet {
                        name: s.clone(),
                        cidr: if rng.gen_bool(0.8) { "10.0.1.0/24".into() } else { String::new() },
                        connections: subnet_names.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect(),
                    })
                    .collect(),
            }
        })
        .collect();
    let subnets: Vec<String> = networks.iter().flat_map(|n| n.subnets.iter().map(|s| s.name.clone())).collect();
    let vms: Vec<AbstractVm> = (0..rng.gen_range(0..3)).map(|i| {
        let n = name(rng, "vm", i);
        random_vm(rng, n, &subnets)
    }).collect();
    let autoscale_groups: Vec<AutoscaleGroup> = (0..rng.gen_range(0..3))
        .map(|i| {
            let min = rng.gen_range(0..4);
            let vm_name = name(rng, "asgvm", i);
            AutoscaleGroup {
                name: name(rng, "asg", i),
                vm: random_vm(rng, vm_name, &subnets),
                min,
                max: min + rng.gen_range(0..4),
            }
        })
        .collect();
    let vm_names: Vec<String> = vms.iter().map(|v| v.name.clone()).chain(autoscale_groups.iter().map(|a| a.vm.name.clone())).collect();
    let vm_images = if vm_names.is_empty() {
        vec![]
    } else {
        (0..rng.gen_range(0..3))
            .map(|i| VmImage {
                name: name(rng, "img", i),
                generates: vm_names.choose(rng).unwrap().clone(),
            })
            .collect()
    };
    InfrastructureModel {
        name: name(rng, "infra", 0),
        networks,
        vms,
        vm_images,
        autoscale_groups,
    }
}

fn random_properties(rng: &mut ChaCha8Rng, prefix: &str) -> Vec<Property> {
    (0..rng.gen_range(0..5))
        .map(|i| {
            let value = if rng.gen_bool(0.5) {
                PropertyValue::text(text(rng))
            } else {
                let decimals = rng.gen_range(0..3u32);
                let v = rng.gen_range(0..1_000_000) as f64 / 10f64.powi(decimals as i32);
                PropertyValue::number(v, decimals as usize)
            };
            Property {
                key: format!("{prefix}_key{i}"),
                value,
            }
        })
        .collect()
}

fn random_concrete(rng: &mut ChaCha8Rng, k: usize, infra: &InfrastructureModel) -> ConcreteInfrastructure {
    let pick = |rng: &mut ChaCha8Rng, names: Vec<String>| -> String {
        names.choose(rng).cloned().unwrap_or_else(|| "unmapped".to_string())
    };
    ConcreteInfrastructure {
        name: format!("opt_infra{k}"),
        provider_blocks: (0..rng.gen_range(0..3))
            .map(|p| ProviderBlock {
                provider: ["aws", "azure", "gcp"][p].to_string(),
                storages: (0..rng.gen_range(0..3))
                    .map(|i| ConcreteStorage {
                        name: name(rng, "sto", i),
                        properties: random_properties(rng, "st"),
                    })
                    .collect(),
            })
            .collect(),
        vms: (0..rng.gen_range(0..3))
            .map(|i| ConcreteVm {
                name: name(rng, "cvm", i),
                properties: random_properties(rng, "vm"),
                maps: pick(rng, infra.vms.iter().map(|v| v.name.clone()).collect()),
            })
            .collect(),
        nets: infra
            .networks
            .iter()
            .map(|n| ConcreteNet {
                name: format!("opt_network_{}", n.name),
                maps: n.name.clone(),
            })
            .collect(),
        images: infra
            .vm_images
            .iter()
            .map(|img| ConcreteImage {
                name: format!("concrete_{}", img.name),
                image_name: text(rng),
                maps: img.name.clone(),
            })
            .collect(),
        asgs: infra
            .autoscale_groups
            .iter()
            .map(|a| ConcreteAsg {
                name: format!("concrete_{}", a.name),
                properties: random_properties(rng, "vm"),
                maps: a.name.clone(),
            })
            .collect(),
    }
}

/// Blocks of a random well-formed document, in source order.
pub fn random_blocks(seed: u64) -> Vec<Block> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::new();
    if rng.gen_bool(0.9) {
        blocks.push(Block::Optimization(random_optimization(&mut rng)));
    }
    let infra = random_infrastructure(&mut rng);
    if rng.gen_bool(0.8) {
        for k in 1..=rng.gen_range(0..3) {
            blocks.push(Block::Concrete(random_concrete(&mut rng, k, &infra)));
        }
        blocks.push(Block::Infrastructure(infra));
    }
    if rng.gen_bool(0.3) {
        let n = name(&mut rng, "app", 0);
        blocks.push(Block::Other(RawBlock {
            keyword: "application".into(),
            name: Some(n.clone()),
            text: format!("application {n} {{\n  component c {{ x \"y\" }}\n}}"),
        }));
    }
    blocks.shuffle(&mut rng);
    if blocks.is_empty() {
        blocks.push(Block::Optimization(random_optimization(&mut rng)));
    }
    blocks
}

pub fn render_blocks(blocks: &[Block]) -> String {
    emit_document(&Document::new(blocks.to_vec()))
}
