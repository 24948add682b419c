//! Case-file ingestion: a JSON document describing the network, parameters
//! and planning options, plus the two embedded reference systems.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::contingency::{ContingencyConfig, ContingencyError, DEFAULT_STATE_CAP};
use crate::network::{CaseError, CaseParameters, Money, PowerNetwork};
use crate::plan::PlanningOptions;

/// A fully validated case: network, parameters, planning options and the
/// contingency policy used for unreliability evaluation.
#[derive(Clone, Debug)]
pub struct Case {
    pub name: String,
    pub network: PowerNetwork,
    pub params: CaseParameters,
    pub options: PlanningOptions,
    pub contingency: ContingencySpec,
}

impl Case {
    pub fn contingency_config(&self) -> Result<ContingencyConfig, ContingencyError> {
        let mut config = match &self.contingency.failable {
            FailableSpec::NonTransformer => {
                ContingencyConfig::non_transformer(&self.network, self.contingency.max_order)
            }
            FailableSpec::All => {
                ContingencyConfig::all_branches(&self.network, self.contingency.max_order)
            }
            FailableSpec::Branches(pairs) => {
                let mut indices = Vec::with_capacity(pairs.len());
                for &(from, to) in pairs {
                    let i = self.network.bus_index(from);
                    let j = self.network.bus_index(to);
                    let idx = match (i, j) {
                        (Some(i), Some(j)) => self.network.branch_index(i, j),
                        _ => None,
                    };
                    match idx {
                        Some(idx) => indices.push(idx),
                        None => {
                            return Err(ContingencyError::BadConfig {
                                what: format!("({from},{to}) is not a branch of the case"),
                            })
                        }
                    }
                }
                ContingencyConfig::explicit(&self.network, indices, self.contingency.max_order)?
            }
        };
        config.state_cap = self.contingency.state_cap.unwrap_or(DEFAULT_STATE_CAP);
        Ok(config)
    }
}

/// Contingency policy as written in the case file.
#[derive(Clone, Debug)]
pub struct ContingencySpec {
    pub failable: FailableSpec,
    pub max_order: usize,
    pub state_cap: Option<usize>,
}

impl Default for ContingencySpec {
    fn default() -> Self {
        ContingencySpec {
            failable: FailableSpec::NonTransformer,
            max_order: 1,
            state_cap: None,
        }
    }
}

#[derive(Clone, Debug)]
pub enum FailableSpec {
    NonTransformer,
    All,
    Branches(Vec<(u32, u32)>),
}

// ---------------------------------------------------------------------------
// Serde document types
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct CaseFile {
    #[serde(default)]
    name: String,
    buses: Vec<u32>,
    branches: Vec<BranchEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    substations: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ci_topology: Option<Vec<(u32, u32)>>,
    controller_bus: u32,
    parameters: ParametersEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    options: Option<OptionsEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BranchEntry {
    from: u32,
    to: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    transformer: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reliability: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParametersEntry {
    cost_pmu: f64,
    cost_dulr: f64,
    cost_pdc: f64,
    cost_interrupt: f64,
    line_reliability_default: f64,
    compression_ratio: f64,
    message_rate: f64,
    channel_limit: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    cost_pmu_overrides: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    cost_dulr_overrides: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    cost_interrupt_overrides: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct OptionsEntry {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    prohibited_buses: Vec<u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    existing_pmus: BTreeMap<String, Vec<u32>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    redundancy_degree: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    channel_limit: Option<u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    traffic_caps: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_unreliability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contingency: Option<ContingencyEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ContingencyEntry {
    #[serde(default)]
    failable: Option<FailableEntry>,
    #[serde(default)]
    max_order: Option<usize>,
    #[serde(default)]
    state_cap: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum FailableEntry {
    Named(String),
    Branches(Vec<(u32, u32)>),
}

fn parse_bus_key(key: &str, context: &str) -> Result<u32, CaseError> {
    key.parse().map_err(|_| CaseError::BadParameter {
        what: format!("{context}: key {key:?} is not a bus id"),
    })
}

/// Parses a "i-j" key into a directed bus-id pair.
fn parse_pair_key(key: &str, context: &str) -> Result<(u32, u32), CaseError> {
    let mut parts = key.splitn(2, '-');
    let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
        return Err(CaseError::BadParameter {
            what: format!("{context}: key {key:?} is not of the form \"i-j\""),
        });
    };
    Ok((
        parse_bus_key(a.trim(), context)?,
        parse_bus_key(b.trim(), context)?,
    ))
}

/// Loads and validates a case from a byte stream.
pub fn load_case(mut reader: impl Read) -> Result<Case, CaseError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    load_case_str(&text)
}

pub fn load_case_str(text: &str) -> Result<Case, CaseError> {
    let file: CaseFile = serde_json::from_str(text)?;
    let default_reliability = file.parameters.line_reliability_default;

    let raw_branches: Vec<(u32, u32, bool, f64)> = file
        .branches
        .iter()
        .map(|b| {
            (
                b.from,
                b.to,
                b.transformer,
                b.reliability.unwrap_or(default_reliability),
            )
        })
        .collect();
    let network = PowerNetwork::new(
        file.buses.clone(),
        raw_branches,
        file.substations.clone(),
        file.controller_bus,
        file.ci_topology.clone(),
    )?;

    let need_bus = |id: u32, context: &str| -> Result<usize, CaseError> {
        network.bus_index(id).ok_or(CaseError::UnknownBus {
            bus: id,
            context: context.to_string(),
        })
    };

    let p = &file.parameters;
    let mut params = CaseParameters {
        cost_pmu: Money::from_dollars(p.cost_pmu)?,
        cost_dulr: Money::from_dollars(p.cost_dulr)?,
        cost_pdc: Money::from_dollars(p.cost_pdc)?,
        cost_interrupt: Money::from_dollars(p.cost_interrupt)?,
        line_reliability_default: p.line_reliability_default,
        compression_ratio: p.compression_ratio,
        message_rate: p.message_rate,
        channel_limit: p.channel_limit,
        pmu_cost_overrides: BTreeMap::new(),
        dulr_cost_overrides: BTreeMap::new(),
        interrupt_cost_overrides: BTreeMap::new(),
    };
    for (key, &dollars) in &p.cost_pmu_overrides {
        let bus = need_bus(parse_bus_key(key, "cost_pmu_overrides")?, "cost_pmu_overrides")?;
        params.pmu_cost_overrides.insert(bus, Money::from_dollars(dollars)?);
    }
    for (key, &dollars) in &p.cost_dulr_overrides {
        let (i, j) = parse_pair_key(key, "cost_dulr_overrides")?;
        let (i, j) = (
            need_bus(i, "cost_dulr_overrides")?,
            need_bus(j, "cost_dulr_overrides")?,
        );
        params.dulr_cost_overrides.insert((i, j), Money::from_dollars(dollars)?);
    }
    for (key, &dollars) in &p.cost_interrupt_overrides {
        let bus = need_bus(
            parse_bus_key(key, "cost_interrupt_overrides")?,
            "cost_interrupt_overrides",
        )?;
        params
            .interrupt_cost_overrides
            .insert(bus, Money::from_dollars(dollars)?);
    }
    params.validate()?;

    let mut options = PlanningOptions::default();
    let mut contingency = ContingencySpec::default();
    if let Some(entry) = &file.options {
        for &bus in &entry.prohibited_buses {
            options.prohibited.insert(need_bus(bus, "prohibited_buses")?);
        }
        for (key, observed) in &entry.existing_pmus {
            let bus = need_bus(parse_bus_key(key, "existing_pmus")?, "existing_pmus")?;
            let mut set: BTreeSet<usize> = BTreeSet::new();
            set.insert(bus);
            for &target in observed {
                set.insert(need_bus(target, "existing_pmus observed set")?);
            }
            options.existing_pmus.insert(bus, set);
        }
        for (key, &degree) in &entry.redundancy_degree {
            let bus = need_bus(parse_bus_key(key, "redundancy_degree")?, "redundancy_degree")?;
            options.redundancy.insert(bus, degree);
        }
        options.channel_limit = entry.channel_limit;
        for (key, &cap) in &entry.traffic_caps {
            let (i, j) = parse_pair_key(key, "traffic_caps")?;
            let pair = (need_bus(i, "traffic_caps")?, need_bus(j, "traffic_caps")?);
            options.traffic_caps.insert(pair, cap);
        }
        options.budget_cap = entry.max_budget.map(Money::from_dollars).transpose()?;
        options.unreliability_cap = entry.max_unreliability;
        if let Some(c) = &entry.contingency {
            contingency.max_order = c.max_order.unwrap_or(1);
            contingency.state_cap = c.state_cap;
            contingency.failable = match &c.failable {
                None => FailableSpec::NonTransformer,
                Some(FailableEntry::Named(name)) => match name.as_str() {
                    "non_transformer" => FailableSpec::NonTransformer,
                    "all" => FailableSpec::All,
                    other => {
                        return Err(CaseError::BadOptions {
                            what: format!(
                                "contingency.failable {other:?} is not \"non_transformer\", \"all\" or a branch list"
                            ),
                        })
                    }
                },
                Some(FailableEntry::Branches(pairs)) => FailableSpec::Branches(pairs.clone()),
            };
        }
    }
    options.validate(&network, &params)?;

    Ok(Case {
        name: file.name,
        network,
        params,
        options,
        contingency,
    })
}

/// Serializes a case back to its JSON document form; `load_case` on the
/// result reproduces an identical case.
pub fn serialize_case(case: &Case) -> String {
    let network = &case.network;
    let id = |i: usize| network.bus_id(i);
    let file = CaseFile {
        name: case.name.clone(),
        buses: network.bus_ids().to_vec(),
        branches: network
            .branches()
            .iter()
            .map(|b| BranchEntry {
                from: id(b.a),
                to: id(b.b),
                transformer: b.transformer,
                reliability: if b.reliability == case.params.line_reliability_default {
                    None
                } else {
                    Some(b.reliability)
                },
            })
            .collect(),
        substations: Some(
            network
                .substations()
                .iter()
                .map(|group| group.iter().map(|&i| id(i)).collect())
                .collect(),
        ),
        ci_topology: if network.has_ci_override() {
            Some(
                network
                    .ci_edges()
                    .iter()
                    .map(|&(a, b)| (id(a), id(b)))
                    .collect(),
            )
        } else {
            None
        },
        controller_bus: id(network.controller()),
        parameters: ParametersEntry {
            cost_pmu: case.params.cost_pmu.dollars(),
            cost_dulr: case.params.cost_dulr.dollars(),
            cost_pdc: case.params.cost_pdc.dollars(),
            cost_interrupt: case.params.cost_interrupt.dollars(),
            line_reliability_default: case.params.line_reliability_default,
            compression_ratio: case.params.compression_ratio,
            message_rate: case.params.message_rate,
            channel_limit: case.params.channel_limit,
            cost_pmu_overrides: case
                .params
                .pmu_cost_overrides
                .iter()
                .map(|(&bus, &m)| (id(bus).to_string(), m.dollars()))
                .collect(),
            cost_dulr_overrides: case
                .params
                .dulr_cost_overrides
                .iter()
                .map(|(&(i, j), &m)| (format!("{}-{}", id(i), id(j)), m.dollars()))
                .collect(),
            cost_interrupt_overrides: case
                .params
                .interrupt_cost_overrides
                .iter()
                .map(|(&bus, &m)| (id(bus).to_string(), m.dollars()))
                .collect(),
        },
        options: {
            let o = &case.options;
            let empty = o.prohibited.is_empty()
                && o.existing_pmus.is_empty()
                && o.redundancy.is_empty()
                && o.channel_limit.is_none()
                && o.traffic_caps.is_empty()
                && o.budget_cap.is_none()
                && o.unreliability_cap.is_none()
                && matches!(case.contingency.failable, FailableSpec::NonTransformer)
                && case.contingency.max_order == 1
                && case.contingency.state_cap.is_none();
            if empty {
                None
            } else {
                Some(OptionsEntry {
                    prohibited_buses: o.prohibited.iter().map(|&i| id(i)).collect(),
                    existing_pmus: o
                        .existing_pmus
                        .iter()
                        .map(|(&bus, observed)| {
                            (
                                id(bus).to_string(),
                                observed.iter().map(|&i| id(i)).collect(),
                            )
                        })
                        .collect(),
                    redundancy_degree: o
                        .redundancy
                        .iter()
                        .map(|(&bus, &t)| (id(bus).to_string(), t))
                        .collect(),
                    channel_limit: o.channel_limit,
                    traffic_caps: o
                        .traffic_caps
                        .iter()
                        .map(|(&(i, j), &cap)| (format!("{}-{}", id(i), id(j)), cap))
                        .collect(),
                    max_budget: o.budget_cap.map(|m| m.dollars()),
                    max_unreliability: o.unreliability_cap,
                    contingency: Some(ContingencyEntry {
                        failable: Some(match &case.contingency.failable {
                            FailableSpec::NonTransformer => {
                                FailableEntry::Named("non_transformer".to_string())
                            }
                            FailableSpec::All => FailableEntry::Named("all".to_string()),
                            FailableSpec::Branches(pairs) => {
                                FailableEntry::Branches(pairs.clone())
                            }
                        }),
                        max_order: Some(case.contingency.max_order),
                        state_cap: case.contingency.state_cap,
                    }),
                })
            }
        },
    };
    serde_json::to_string_pretty(&file).expect("case serialization cannot fail")
}

const IEEE9: &str = include_str!("cases/ieee9.json");
const IEEE57: &str = include_str!("cases/ieee57.json");

/// Returns an embedded reference case (`ieee9` or `ieee57`).
pub fn builtin(name: &str) -> Result<Case, CaseError> {
    match name {
        "ieee9" => load_case_str(IEEE9),
        "ieee57" => load_case_str(IEEE57),
        other => Err(CaseError::BadParameter {
            what: format!("unknown built-in case {other:?}; available: ieee9, ieee57"),
        }),
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &["ieee9", "ieee57"]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_cases_load() {
        for name in builtin_names() {
            let case = builtin(name).unwrap();
            assert_eq!(&case.name, name);
        }
    }

    #[test]
    fn case_round_trips_through_serialization() {
        for name in builtin_names() {
            let case = builtin(name).unwrap();
            let text = serialize_case(&case);
            let again = load_case_str(&text).unwrap();
            assert_eq!(serialize_case(&again), text);
            assert_eq!(case.network.bus_ids(), again.network.bus_ids());
            assert_eq!(case.network.branches(), again.network.branches());
            assert_eq!(case.network.substations(), again.network.substations());
        }
    }

    #[test]
    fn unknown_bus_in_branch_is_reported() {
        let text = r#"{
            "buses": [1, 2],
            "branches": [{"from": 1, "to": 99}],
            "controller_bus": 1,
            "parameters": {
                "cost_pmu": 1.0, "cost_dulr": 1.0, "cost_pdc": 1.0, "cost_interrupt": 1.0,
                "line_reliability_default": 0.99, "compression_ratio": 0.5,
                "message_rate": 100.0, "channel_limit": 2
            }
        }"#;
        let err = load_case_str(text).unwrap_err();
        assert!(err.to_string().contains("unknown bus 99"));
    }

    #[test]
    fn options_round_trip_and_validation() {
        let case = builtin("ieee9").unwrap();
        let mut text = serialize_case(&case);
        text = text.replace(
            "\"controller_bus\": 8,",
            r#""controller_bus": 8,
            "options": {
                "prohibited_buses": [6],
                "existing_pmus": {"7": [5, 7, 8]},
                "redundancy_degree": {"4": 1},
                "contingency": {"failable": "all", "max_order": 2}
            },"#,
        );
        let case = load_case_str(&text).unwrap();
        let of = |id: u32| case.network.bus_index(id).unwrap();
        assert!(case.options.prohibited.contains(&of(6)));
        assert_eq!(case.options.redundancy_of(of(4)), 1);
        let observed = &case.options.existing_pmus[&of(7)];
        assert_eq!(observed.len(), 3);
        let config = case.contingency_config().unwrap();
        assert_eq!(config.failable.len(), 9);
        assert_eq!(config.max_order, 2);
        let again = load_case_str(&serialize_case(&case)).unwrap();
        assert_eq!(serialize_case(&again), serialize_case(&case));
    }

    #[test]
    fn existing_pmu_on_prohibited_bus_rejected() {
        let case = builtin("ieee9").unwrap();
        let mut text = serialize_case(&case);
        text = text.replace(
            "\"controller_bus\": 8,",
            r#""controller_bus": 8,
            "options": {
                "prohibited_buses": [7],
                "existing_pmus": {"7": [5, 7, 8]}
            },"#,
        );
        let err = load_case_str(&text).unwrap_err();
        assert!(matches!(err, CaseError::BadOptions { .. }));
    }
}
