//! Infrastructural elements catalogue: loading, validation and matchmaking.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doml::{Requirement, Target, MAX_VM_MEMORY_KEY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementType {
    #[serde(rename = "VM")]
    Vm,
    Storage,
}

impl ElementType {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementType::Vm => "VM",
            ElementType::Storage => "Storage",
        }
    }
}

impl fmt::Display for ElementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElementType {
    type Err = String;

    /// Case-insensitive: `VM`, `vm`, `Storage`, `storage`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vm" => Ok(ElementType::Vm),
            "storage" => Ok(ElementType::Storage),
            _ => Err(format!("unknown element type `{}` (expected VM or Storage)", s.trim())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogueElement {
    pub id: String,
    pub element_type: ElementType,
    pub provider: String,
    pub region: String,
    pub cost: f64,
    pub availability: f64,
    pub performance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_gb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmImageEntry {
    pub provider: String,
    pub image_name: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalogue {
    pub elements: Vec<CatalogueElement>,
    #[serde(default)]
    pub vm_images: Vec<VmImageEntry>,
}

#[derive(Debug, Error)]
pub enum CatalogueError {
    #[error("cannot read catalogue {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("catalogue schema violation: {0}")]
    Schema(String),
    #[error("catalogue element `{id}`: {message}")]
    InvalidElement { id: String, message: String },
    #[error("duplicate catalogue element id `{0}`")]
    DuplicateId(String),
    #[error("more than one vm image for provider `{0}`")]
    DuplicateImage(String),
}

impl CatalogueError {
    fn with_path(self, path: &Path) -> Self {
        match self {
            CatalogueError::Schema(m) => CatalogueError::Schema(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

pub fn load_catalogue(path: impl AsRef<Path>) -> Result<Catalogue, CatalogueError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogueError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Catalogue::from_json(&text).map_err(|e| e.with_path(path))
}

impl Catalogue {
    pub fn from_json(text: &str) -> Result<Catalogue, CatalogueError> {
        let cat: Catalogue =
            serde_json::from_str(text).map_err(|e| CatalogueError::Schema(e.to_string()))?;
        cat.validate()?;
        Ok(cat)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalogue serializes")
    }

    pub fn validate(&self) -> Result<(), CatalogueError> {
        let mut ids = HashSet::new();
        for el in &self.elements {
            let bad = |message: &str| CatalogueError::InvalidElement {
                id: el.id.clone(),
                message: message.to_string(),
            };
            if el.id.is_empty() {
                return Err(bad("empty id"));
            }
            if !ids.insert(el.id.as_str()) {
                return Err(CatalogueError::DuplicateId(el.id.clone()));
            }
            if !(el.cost.is_finite() && el.cost >= 0.0) {
                return Err(bad("cost must be a finite number >= 0"));
            }
            if !(el.availability.is_finite() && (0.0..=100.0).contains(&el.availability)) {
                return Err(bad("availability must lie in [0, 100]"));
            }
            if !(el.performance.is_finite() && el.performance >= 0.0) {
                return Err(bad("performance must be a finite number >= 0"));
            }
            match (el.element_type, el.memory_gb) {
                (ElementType::Vm, None) => return Err(bad("VM elements require memory_gb")),
                (ElementType::Vm, Some(m)) if !(m.is_finite() && m > 0.0) => {
                    return Err(bad("memory_gb must be > 0"))
                }
                (ElementType::Storage, Some(_)) => {
                    return Err(bad("memory_gb is only allowed on VM elements"))
                }
                _ => {}
            }
        }
        let mut providers = HashSet::new();
        for img in &self.vm_images {
            if !providers.insert(img.provider.to_ascii_lowercase()) {
                return Err(CatalogueError::DuplicateImage(img.provider.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&CatalogueElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// Image registered for `provider` (case-insensitive).
    pub fn lookup_image(&self, provider: &str) -> Option<&str> {
        self.vm_images
            .iter()
            .find(|i| i.provider.eq_ignore_ascii_case(provider))
            .map(|i| i.image_name.as_str())
    }

    pub fn of_type(&self, element_type: ElementType) -> impl Iterator<Item = &CatalogueElement> {
        self.elements.iter().filter(move |e| e.element_type == element_type)
    }
}

pub fn lookup_image<'a>(catalogue: &'a Catalogue, provider: &str) -> Option<&'a str> {
    catalogue.lookup_image(provider)
}

/// Per-element predicate derived from the categorical and memory requirements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ElementFilter {
    /// Each inner list is one provider requirement; an element must match all.
    pub providers: Vec<Vec<String>>,
    pub regions: Vec<Vec<String>>,
    pub max_vm_memory: Option<f64>,
}

impl ElementFilter {
    pub fn from_requirements(requirements: &[Requirement]) -> Self {
        let mut f = ElementFilter::default();
        for req in requirements {
            match req {
                Requirement::Categorical(c) => match c.target {
                    Target::Provider => f.providers.push(c.allowed.clone()),
                    Target::Region => f.regions.push(c.allowed.clone()),
                    _ => {}
                },
                Requirement::KeyValue(kv) if kv.key == MAX_VM_MEMORY_KEY => {
                    if let Ok(cap) = kv.value.trim().parse::<f64>() {
                        f.max_vm_memory = Some(f.max_vm_memory.map_or(cap, |c: f64| c.min(cap)));
                    }
                }
                _ => {}
            }
        }
        f
    }

    pub fn accepts(&self, el: &CatalogueElement) -> bool {
        let in_set = |value: &str, allowed: &Vec<String>| {
            allowed.iter().any(|a| a.eq_ignore_ascii_case(value))
        };
        if !self.providers.iter().all(|set| in_set(&el.provider, set)) {
            return false;
        }
        if !self.regions.iter().all(|set| in_set(&el.region, set)) {
            return false;
        }
        if el.element_type == ElementType::Vm {
            if let (Some(cap), Some(mem)) = (self.max_vm_memory, el.memory_gb) {
                if mem > cap {
                    return false;
                }
            }
        }
        true
    }

    /// Human-readable reasons `el` is rejected; empty when accepted.
    pub fn rejections(&self, el: &CatalogueElement) -> Vec<String> {
        let mut out = Vec::new();
        for set in &self.providers {
            if !set.iter().any(|a| a.eq_ignore_ascii_case(&el.provider)) {
                out.push(format!("provider `{}` not in {:?}", el.provider, set));
            }
        }
        for set in &self.regions {
            if !set.iter().any(|a| a.eq_ignore_ascii_case(&el.region)) {
                out.push(format!("region `{}` not in {:?}", el.region, set));
            }
        }
        if el.element_type == ElementType::Vm {
            if let (Some(cap), Some(mem)) = (self.max_vm_memory, el.memory_gb) {
                if mem > cap {
                    out.push(format!("memory {mem} GB exceeds {MAX_VM_MEMORY_KEY} {cap}"));
                }
            }
        }
        out
    }
}

/// Matchmaking: elements of `element_type` that satisfy every categorical and
/// per-element requirement. Aggregate bounds are not applied here.
pub fn filter_candidates(
    catalogue: &Catalogue,
    element_type: ElementType,
    requirements: &[Requirement],
) -> Vec<CatalogueElement> {
    let filter = ElementFilter::from_requirements(requirements);
    catalogue
        .of_type(element_type)
        .filter(|e| filter.accepts(e))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doml::{CategoricalMatch, KeyValue};

    fn fig5() -> Catalogue {
        Catalogue::from_json(
            r#"{
              "elements": [
                {"id": "StandardStorage1_Europe", "element_type": "Storage", "provider": "aws",
                 "region": "europe", "cost": 130.0, "availability": 97, "performance": 4},
                {"id": "t2.nano", "element_type": "VM", "provider": "aws", "region": "europe",
                 "cost": 100.53, "availability": 98, "performance": 4, "memory_gb": 1024}
              ],
              "vm_images": [{"provider": "aws", "image_name": "ami-012e54b30d5c6bc9d"}]
            }"#,
        )
        .unwrap()
    }

    fn provider(allowed: &[&str]) -> Requirement {
        Requirement::Categorical(CategoricalMatch {
            id: "r".into(),
            description: "Provider".into(),
            allowed: allowed.iter().map(|s| s.to_string()).collect(),
            target: Target::Provider,
        })
    }

    fn memory(cap: &str) -> Requirement {
        Requirement::KeyValue(KeyValue {
            id: "m".into(),
            key: MAX_VM_MEMORY_KEY.into(),
            value: cap.into(),
        })
    }

    #[test]
    fn loads_reference_elements() {
        let cat = fig5();
        assert_eq!(cat.elements.len(), 2);
        assert_eq!(cat.vm_images.len(), 1);
    }

    #[test]
    fn empty_catalogue_is_valid() {
        let cat = Catalogue::from_json(r#"{"elements": [], "vm_images": []}"#).unwrap();
        assert!(cat.elements.is_empty());
        assert_eq!(cat.lookup_image("aws"), None);
    }

    #[test]
    fn availability_out_of_range() {
        let err = Catalogue::from_json(
            r#"{"elements": [{"id": "s", "element_type": "Storage", "provider": "aws", "region": "eu",
                "cost": 1, "availability": 101, "performance": 1}], "vm_images": []}"#,
        )
        .unwrap_err();
        assert!(matches!(err, CatalogueError::InvalidElement { .. }), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let el = r#"{"id": "s", "element_type": "Storage", "provider": "aws", "region": "eu", "cost": 1, "availability": 1, "performance": 1}"#;
        let err = Catalogue::from_json(&format!(r#"{{"elements": [{el}, {el}]}}"#)).unwrap_err();
        assert!(matches!(err, CatalogueError::DuplicateId(ref id) if id == "s"));
    }

    #[test]
    fn schema_violations() {
        assert!(matches!(
            Catalogue::from_json(r#"{"elements": [{"id": "s"}]}"#).unwrap_err(),
            CatalogueError::Schema(_)
        ));
        assert!(matches!(
            Catalogue::from_json(r#"{"elements": [{"id": "v", "element_type": "VM", "provider": "aws", "region": "eu", "cost": 1, "availability": 1, "performance": 1}]}"#).unwrap_err(),
            CatalogueError::InvalidElement { .. }
        ));
        assert!(matches!(
            Catalogue::from_json(r#"{"elements": [{"id": "v", "element_type": "VM", "provider": "aws", "region": "eu", "cost": "cheap", "availability": 1, "performance": 1, "memory_gb": 1}]}"#).unwrap_err(),
            CatalogueError::Schema(_)
        ));
    }

    #[test]
    fn matchmaking_fig2_requirements() {
        let cat = fig5();
        let reqs = vec![provider(&["aws"]), memory("1024")];
        let vms = filter_candidates(&cat, ElementType::Vm, &reqs);
        assert_eq!(vms.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), vec!["t2.nano"]);
        let sto = filter_candidates(&cat, ElementType::Storage, &reqs);
        assert_eq!(sto.len(), 1);
    }

    #[test]
    fn provider_match_is_case_insensitive() {
        let cat = fig5();
        assert_eq!(filter_candidates(&cat, ElementType::Vm, &[provider(&["AWS"])]).len(), 1);
        assert!(filter_candidates(&cat, ElementType::Vm, &[provider(&["azure"])]).is_empty());
    }

    #[test]
    fn memory_cap_excludes_large_vm() {
        let mut cat = fig5();
        cat.elements[1].memory_gb = Some(2048.0);
        assert!(filter_candidates(&cat, ElementType::Vm, &[memory("1024")]).is_empty());
        // Storage has no memory attribute and is unaffected.
        assert_eq!(filter_candidates(&cat, ElementType::Storage, &[memory("1")]).len(), 1);
    }

    #[test]
    fn no_requirements_returns_all_of_type() {
        let cat = fig5();
        assert_eq!(filter_candidates(&cat, ElementType::Vm, &[]).len(), 1);
        assert_eq!(filter_candidates(&cat, ElementType::Storage, &[]).len(), 1);
    }

    #[test]
    fn image_lookup() {
        let cat = fig5();
        assert_eq!(lookup_image(&cat, "aws"), Some("ami-012e54b30d5c6bc9d"));
        assert_eq!(lookup_image(&cat, "gcp"), None);
    }
}
