use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::kind::KindLibrary;
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub kind: String,
    /// Intended design position, if the netlist comes with a placement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<Point>,
}

/// `(instance_id, pin_id)`; serialized as a two-element array.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Endpoint(pub String, pub String);

impl Endpoint {
    pub fn new(instance: impl Into<String>, pin: impl Into<String>) -> Self {
        Endpoint(instance.into(), pin.into())
    }

    pub fn instance(&self) -> &str {
        &self.0
    }

    pub fn pin(&self) -> &str {
        &self.1
    }
}

/// A set of pins to be made electrically common. By convention the first
/// endpoint is the driver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Net {
    pub id: String,
    pub pins: Vec<Endpoint>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub instances: Vec<Instance>,
    pub nets: Vec<Net>,
    #[serde(default)]
    pub redundancy_groups: Vec<Vec<String>>,
}

impl Netlist {
    pub fn from_json(text: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn instance(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// Instance index by id.
    pub fn index(&self) -> BTreeMap<&str, usize> {
        self.instances.iter().enumerate().map(|(i, inst)| (inst.id.as_str(), i)).collect()
    }

    pub fn net(&self, id: &str) -> Option<&Net> {
        self.nets.iter().find(|n| n.id == id)
    }

    /// Instance ids that sit in a redundancy group with at least one other member.
    pub fn redundant_instances(&self) -> BTreeSet<&str> {
        self.redundancy_groups
            .iter()
            .filter(|g| g.len() >= 2)
            .flat_map(|g| g.iter().map(String::as_str))
            .collect()
    }

    /// Count of instances per kind id.
    pub fn kind_counts(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for inst in &self.instances {
            *m.entry(inst.kind.as_str()).or_default() += 1;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
    pub locus: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }
}

/// Checks references and structure; problems are reported, never thrown.
///
/// Errors: duplicate instance or net ids, unknown kinds, endpoints naming a
/// missing instance or pin, nets with fewer than two endpoints, redundancy
/// groups naming a missing instance. Warnings: an endpoint repeated inside a
/// net, and a pin claimed by more than one net.
pub fn validate_netlist(netlist: &Netlist, kinds: &KindLibrary) -> ValidationReport {
    let mut issues = Vec::new();
    let mut err = |message: String, locus: String| issues.push(Issue { severity: Severity::Error, message, locus });

    let mut instances: BTreeMap<&str, &str> = BTreeMap::new();
    for inst in &netlist.instances {
        if instances.insert(&inst.id, &inst.kind).is_some() {
            err(format!("duplicate instance id {}", inst.id), format!("instance {}", inst.id));
        }
        if !kinds.contains(&inst.kind) {
            err(
                format!("instance {} has unknown kind {}", inst.id, inst.kind),
                format!("instance {}", inst.id),
            );
        }
    }

    let mut net_ids = BTreeSet::new();
    let mut pin_owners: BTreeMap<&Endpoint, Vec<&str>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for net in &netlist.nets {
        let locus = format!("net {}", net.id);
        if !net_ids.insert(net.id.as_str()) {
            err(format!("duplicate net id {}", net.id), locus.clone());
        }
        if net.pins.len() < 2 {
            err(format!("net {} has {} endpoint(s); at least 2 required", net.id, net.pins.len()), locus.clone());
        }
        let mut local = BTreeSet::new();
        for ep in &net.pins {
            match instances.get(ep.instance()) {
                None => err(
                    format!("net {} references missing instance {}", net.id, ep.instance()),
                    locus.clone(),
                ),
                Some(kind_id) => {
                    if let Some(kind) = kinds.get(kind_id) {
                        if kind.pin_index(ep.pin()).is_none() {
                            err(
                                format!(
                                    "net {} references missing pin {}.{} (kind {})",
                                    net.id,
                                    ep.instance(),
                                    ep.pin(),
                                    kind_id
                                ),
                                locus.clone(),
                            );
                        }
                    }
                }
            }
            if !local.insert(ep) {
                warnings.push(Issue {
                    severity: Severity::Warning,
                    message: format!("net {} lists {}.{} more than once", net.id, ep.instance(), ep.pin()),
                    locus: locus.clone(),
                });
            } else {
                pin_owners.entry(ep).or_default().push(&net.id);
            }
        }
    }

    for (gi, group) in netlist.redundancy_groups.iter().enumerate() {
        for member in group {
            if !instances.contains_key(member.as_str()) {
                err(
                    format!("redundancy group references missing instance {member}"),
                    format!("redundancy group {gi}"),
                );
            }
        }
    }

    for (ep, owners) in pin_owners {
        if owners.len() > 1 {
            let mut owners = owners;
            owners.sort_unstable();
            warnings.push(Issue {
                severity: Severity::Warning,
                message: format!("pin {}.{} is shared by nets {}", ep.instance(), ep.pin(), owners.join(", ")),
                locus: format!("instance {}", ep.instance()),
            });
        }
    }

    issues.extend(warnings);
    issues.sort();
    let ok = !issues.iter().any(|i| i.severity == Severity::Error);
    ValidationReport { ok, issues }
}
