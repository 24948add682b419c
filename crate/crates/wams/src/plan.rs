//! Placement plans: the PMU/relay/concentrator control matrices, the
//! planning options that shape the feasible set, and a direct constraint
//! checker that audits a concrete plan without going through the
//! optimization model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{CaseParameters, CaseError, Money, PowerNetwork};

/// A concrete construction plan over `n` buses.
///
/// `m[i][j]` (i = j) marks a PMU at bus `i`; `m[i][j]` (i != j) marks a
/// measurement channel of that PMU on branch `(i,j)`. `d[i][j]` marks a
/// dual-use line relay at the `i` end of branch `(i,j)`. `p[i]` marks a
/// phasor data concentrator, and `l[i][j]` routes every device hosted at
/// bus `i` to the concentrator at bus `j`.
#[derive(Clone, PartialEq, Eq)]
pub struct PlacementPlan {
    n: usize,
    m: Vec<bool>,
    d: Vec<bool>,
    p: Vec<bool>,
    l: Vec<bool>,
}

impl PlacementPlan {
    pub fn empty(n: usize) -> PlacementPlan {
        PlacementPlan {
            n,
            m: vec![false; n * n],
            d: vec![false; n * n],
            p: vec![false; n],
            l: vec![false; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn pmu_observe(&self, i: usize, j: usize) -> bool {
        self.m[i * self.n + j]
    }

    pub fn set_pmu_observe(&mut self, i: usize, j: usize, value: bool) {
        self.m[i * self.n + j] = value;
    }

    pub fn relay(&self, i: usize, j: usize) -> bool {
        self.d[i * self.n + j]
    }

    pub fn set_relay(&mut self, i: usize, j: usize, value: bool) {
        self.d[i * self.n + j] = value;
    }

    pub fn pdc(&self, i: usize) -> bool {
        self.p[i]
    }

    pub fn set_pdc(&mut self, i: usize, value: bool) {
        self.p[i] = value;
    }

    pub fn assignment(&self, i: usize, j: usize) -> bool {
        self.l[i * self.n + j]
    }

    pub fn set_assignment(&mut self, i: usize, j: usize, value: bool) {
        self.l[i * self.n + j] = value;
    }

    pub fn pmu_at(&self, i: usize) -> bool {
        self.pmu_observe(i, i)
    }

    /// Buses that host at least one PMU or relay.
    pub fn device_buses(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.hosts_device(i)).collect()
    }

    pub fn hosts_device(&self, i: usize) -> bool {
        self.pmu_at(i) || (0..self.n).any(|j| self.relay(i, j))
    }

    /// Number of branch-current channels used by the PMU at `i`.
    pub fn channel_count(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| j != i && self.pmu_observe(i, j)).count()
    }

    /// True when the plan contains no installation of any kind.
    pub fn is_empty(&self) -> bool {
        !self.m.iter().chain(&self.d).chain(&self.p).chain(&self.l).any(|&b| b)
    }

    /// Re-derives the indicator variables from the control matrices. The
    /// cost indicator skips pre-installed PMUs, whose hardware is already
    /// paid for.
    pub fn derived(&self, network: &PowerNetwork, options: &PlanningOptions) -> DerivedIndicators {
        let n = self.n;
        let mut pmu_paid = vec![false; n];
        let mut device_at = vec![false; n];
        for i in 0..n {
            device_at[i] = self.hosts_device(i);
            pmu_paid[i] = self.pmu_at(i) && !options.existing_pmus.contains_key(&i);
        }
        let mut interrupted = vec![false; network.substation_count()];
        for i in 0..n {
            let any_install =
                (0..n).any(|j| self.pmu_observe(i, j) || self.relay(i, j));
            if any_install {
                interrupted[network.substation_of(i)] = true;
            }
        }
        DerivedIndicators {
            pmu_paid,
            device_at,
            interrupted,
        }
    }
}

impl fmt::Debug for PlacementPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PlacementPlan(n={}, devices at ", self.n)?;
        write!(f, "{:?})", self.device_buses())
    }
}

/// Indicators implied by the control matrices.
#[derive(Clone, Debug)]
pub struct DerivedIndicators {
    /// PMU installations that incur hardware cost (pre-installed units excluded).
    pub pmu_paid: Vec<bool>,
    /// Bus hosts at least one measurement device.
    pub device_at: Vec<bool>,
    /// Substation receives installation work.
    pub interrupted: Vec<bool>,
}

/// Optional planning constraints: forbidden substat­ion work, pre-installed
/// PMUs, per-bus redundancy degrees and cap-style limits.
#[derive(Clone, Debug, Default)]
pub struct PlanningOptions {
    pub prohibited: BTreeSet<usize>,
    /// Pre-installed PMU at bus -> set of buses it observes (self included).
    pub existing_pmus: BTreeMap<usize, BTreeSet<usize>>,
    pub redundancy: BTreeMap<usize, u32>,
    pub channel_limit: Option<u32>,
    /// Max bits/s allowed on the device-to-concentrator pair `(i,j)`.
    pub traffic_caps: BTreeMap<(usize, usize), f64>,
    pub budget_cap: Option<Money>,
    pub unreliability_cap: Option<f64>,
}

impl PlanningOptions {
    pub fn redundancy_of(&self, i: usize) -> u32 {
        self.redundancy.get(&i).copied().unwrap_or(0)
    }

    pub fn effective_channel_limit(&self, params: &CaseParameters) -> u32 {
        self.channel_limit.unwrap_or(params.channel_limit)
    }

    /// Substations that already receive an outage for pre-installed
    /// equipment; their interruption adds no cost.
    pub fn interrupt_free_substations(&self, network: &PowerNetwork) -> BTreeSet<usize> {
        self.existing_pmus
            .keys()
            .map(|&bus| network.substation_of(bus))
            .collect()
    }

    pub fn validate(&self, network: &PowerNetwork, params: &CaseParameters) -> Result<(), CaseError> {
        for &bus in &self.prohibited {
            if self.existing_pmus.contains_key(&bus) {
                return Err(CaseError::BadOptions {
                    what: format!(
                        "bus {} is both prohibited and equipped with an existing PMU",
                        network.bus_id(bus)
                    ),
                });
            }
        }
        let limit = self.effective_channel_limit(params) as usize;
        for (&bus, observed) in &self.existing_pmus {
            let mut channels = 0usize;
            for &target in observed {
                if target == bus {
                    continue;
                }
                if !network.is_observable_branch(bus, target) {
                    return Err(CaseError::BadOptions {
                        what: format!(
                            "existing PMU at bus {} cannot observe bus {}: no measurable branch",
                            network.bus_id(bus),
                            network.bus_id(target)
                        ),
                    });
                }
                channels += 1;
            }
            if channels > limit {
                return Err(CaseError::BadOptions {
                    what: format!(
                        "existing PMU at bus {} uses {} channels, limit is {}",
                        network.bus_id(bus),
                        channels,
                        limit
                    ),
                });
            }
        }
        Ok(())
    }
}

/// A constraint broken by a concrete plan, named by what it means.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    ChannelOnMissingBranch { i: u32, j: u32 },
    RelayOnMissingBranch { i: u32, j: u32 },
    ChannelWithoutPmu { i: u32, j: u32 },
    ChannelLimitExceeded { bus: u32, used: usize, limit: u32 },
    UnassignedDeviceBus { bus: u32 },
    AssignmentWithoutDevice { bus: u32 },
    MultipleAssignments { bus: u32, count: usize },
    AssignmentToNonPdc { bus: u32, target: u32 },
    InsufficientObservability { bus: u32, have: usize, need: u32 },
    ProhibitedInstallation { bus: u32 },
    ExistingPmuMismatch { bus: u32, detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ChannelOnMissingBranch { i, j } => write!(
                f,
                "PMU channel ({i},{j}) does not correspond to a measurable branch"
            ),
            Violation::RelayOnMissingBranch { i, j } => write!(
                f,
                "line relay ({i},{j}) does not correspond to a measurable branch"
            ),
            Violation::ChannelWithoutPmu { i, j } => write!(
                f,
                "channel ({i},{j}) is assigned but bus {i} hosts no PMU"
            ),
            Violation::ChannelLimitExceeded { bus, used, limit } => write!(
                f,
                "PMU at bus {bus} uses {used} measurement channels, limit is {limit}"
            ),
            Violation::UnassignedDeviceBus { bus } => write!(
                f,
                "devices at bus {bus} report to no data concentrator"
            ),
            Violation::AssignmentWithoutDevice { bus } => write!(
                f,
                "bus {bus} is routed to a concentrator but hosts no device"
            ),
            Violation::MultipleAssignments { bus, count } => write!(
                f,
                "devices at bus {bus} report to {count} concentrators, expected exactly one"
            ),
            Violation::AssignmentToNonPdc { bus, target } => write!(
                f,
                "bus {bus} reports to bus {target}, which hosts no data concentrator"
            ),
            Violation::InsufficientObservability { bus, have, need } => write!(
                f,
                "bus {bus} is observed by {have} devices, needs at least {need}"
            ),
            Violation::ProhibitedInstallation { bus } => write!(
                f,
                "installation at bus {bus} is prohibited"
            ),
            Violation::ExistingPmuMismatch { bus, detail } => write!(
                f,
                "pre-installed PMU at bus {bus} is not honored: {detail}"
            ),
        }
    }
}

/// Audits a plan directly against the placement rules: devices only on
/// measurable branches, channels backed by a PMU, channel limits, one
/// concentrator per device bus, base-state observability with the required
/// redundancy, prohibitions and pre-installed equipment. This path shares
/// no code with the optimization model on purpose.
pub fn check_plan(
    plan: &PlacementPlan,
    network: &PowerNetwork,
    params: &CaseParameters,
    options: &PlanningOptions,
) -> Vec<Violation> {
    let n = network.bus_count();
    let id = |i: usize| network.bus_id(i);
    let mut violations = Vec::new();

    for i in 0..n {
        for j in 0..n {
            if i != j && plan.pmu_observe(i, j) {
                if !network.is_observable_branch(i, j) {
                    violations.push(Violation::ChannelOnMissingBranch { i: id(i), j: id(j) });
                } else if !plan.pmu_at(i) {
                    violations.push(Violation::ChannelWithoutPmu { i: id(i), j: id(j) });
                }
            }
            if plan.relay(i, j) && !network.is_observable_branch(i, j) {
                violations.push(Violation::RelayOnMissingBranch { i: id(i), j: id(j) });
            }
        }
    }

    let limit = options.effective_channel_limit(params);
    for i in 0..n {
        let used = plan.channel_count(i);
        if used > limit as usize {
            violations.push(Violation::ChannelLimitExceeded {
                bus: id(i),
                used,
                limit,
            });
        }
    }

    for i in 0..n {
        let hosts = plan.hosts_device(i);
        let routes = (0..n).filter(|&j| plan.assignment(i, j)).count();
        if hosts && routes == 0 {
            violations.push(Violation::UnassignedDeviceBus { bus: id(i) });
        }
        if !hosts && routes > 0 {
            violations.push(Violation::AssignmentWithoutDevice { bus: id(i) });
        }
        if routes > 1 {
            violations.push(Violation::MultipleAssignments {
                bus: id(i),
                count: routes,
            });
        }
        for j in 0..n {
            if plan.assignment(i, j) && !plan.pdc(j) {
                violations.push(Violation::AssignmentToNonPdc {
                    bus: id(i),
                    target: id(j),
                });
            }
        }
    }

    // Base-state observability with per-bus redundancy degree: count the
    // devices able to measure or infer each bus voltage.
    for i in 0..n {
        let mut observers = 0usize;
        for j in 0..n {
            // A device at j observes i either at i itself (j = i) or across
            // a live measurable branch (j,i).
            if j == i || network.is_observable_branch(i, j) {
                if plan.pmu_observe(j, i) {
                    observers += 1;
                }
                if plan.relay(j, i) {
                    observers += 1;
                }
            }
            // A relay at the i end measures the bus voltage of i directly.
            if plan.relay(i, j) {
                observers += 1;
            }
        }
        let need = options.redundancy_of(i) + 1;
        if observers < need as usize {
            violations.push(Violation::InsufficientObservability {
                bus: id(i),
                have: observers,
                need,
            });
        }
    }

    for &bus in &options.prohibited {
        let any = (0..n).any(|j| plan.pmu_observe(bus, j) || plan.relay(bus, j));
        if any {
            violations.push(Violation::ProhibitedInstallation { bus: id(bus) });
        }
    }

    for (&bus, observed) in &options.existing_pmus {
        if !plan.pmu_at(bus) {
            violations.push(Violation::ExistingPmuMismatch {
                bus: id(bus),
                detail: "plan drops the installed PMU".to_string(),
            });
            continue;
        }
        for j in 0..n {
            let should = observed.contains(&j) && j != bus;
            if plan.pmu_observe(bus, j) != should && j != bus {
                violations.push(Violation::ExistingPmuMismatch {
                    bus: id(bus),
                    detail: format!(
                        "channel toward bus {} must be {}",
                        id(j),
                        if should { "kept" } else { "absent" }
                    ),
                });
            }
        }
    }

    violations
}

/// Errors raised while reading or interpreting a plan file.
#[derive(Debug, Error)]
pub enum PlanError {
    #[error("plan file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("plan references unknown bus {bus}")]
    UnknownBus { bus: u32 },
    #[error("duplicate device: {what}")]
    Duplicate { what: String },
    #[error("devices at bus {bus} report to different concentrators")]
    ConflictingAssignment { bus: u32 },
    #[error("pmu at bus {bus} lists observed bus {observed} with no branch between them")]
    BadObservedSet { bus: u32, observed: u32 },
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanFile {
    #[serde(default)]
    pmus: Vec<PmuEntry>,
    #[serde(default)]
    dulrs: Vec<DulrEntry>,
    #[serde(default)]
    pdcs: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PmuEntry {
    bus: u32,
    observes: Vec<u32>,
    pdc: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct DulrEntry {
    bus: u32,
    line_to: u32,
    pdc: u32,
}

impl PlacementPlan {
    /// Reads a plan from its JSON document form.
    pub fn from_json(text: &str, network: &PowerNetwork) -> Result<PlacementPlan, PlanError> {
        let file: PlanFile = serde_json::from_str(text)?;
        let look = |bus: u32| network.bus_index(bus).ok_or(PlanError::UnknownBus { bus });
        let mut plan = PlacementPlan::empty(network.bus_count());
        let mut route: BTreeMap<usize, usize> = BTreeMap::new();
        let mut set_route = |plan_bus: usize, pdc: usize| -> Result<(), PlanError> {
            if let Some(&existing) = route.get(&plan_bus) {
                if existing != pdc {
                    return Err(PlanError::ConflictingAssignment {
                        bus: network.bus_id(plan_bus),
                    });
                }
            } else {
                route.insert(plan_bus, pdc);
            }
            Ok(())
        };

        for entry in &file.pmus {
            let i = look(entry.bus)?;
            if plan.pmu_at(i) {
                return Err(PlanError::Duplicate {
                    what: format!("PMU at bus {}", entry.bus),
                });
            }
            plan.set_pmu_observe(i, i, true);
            for &obs in &entry.observes {
                let j = look(obs)?;
                if j == i {
                    continue;
                }
                if !network.is_observable_branch(i, j) {
                    return Err(PlanError::BadObservedSet {
                        bus: entry.bus,
                        observed: obs,
                    });
                }
                plan.set_pmu_observe(i, j, true);
            }
            set_route(i, look(entry.pdc)?)?;
        }
        for entry in &file.dulrs {
            let i = look(entry.bus)?;
            let j = look(entry.line_to)?;
            if plan.relay(i, j) {
                return Err(PlanError::Duplicate {
                    what: format!("relay {}({})", entry.bus, entry.line_to),
                });
            }
            if !network.is_observable_branch(i, j) {
                return Err(PlanError::BadObservedSet {
                    bus: entry.bus,
                    observed: entry.line_to,
                });
            }
            plan.set_relay(i, j, true);
            set_route(i, look(entry.pdc)?)?;
        }
        for &pdc in &file.pdcs {
            plan.set_pdc(look(pdc)?, true);
        }
        for (bus, pdc) in route {
            plan.set_assignment(bus, pdc, true);
        }
        Ok(plan)
    }

    /// Serializes the plan to its JSON document form.
    pub fn to_json(&self, network: &PowerNetwork) -> String {
        let n = self.n;
        let id = |i: usize| network.bus_id(i);
        let route_of = |i: usize| (0..n).find(|&j| self.assignment(i, j)).map(&id).unwrap_or(0);
        let mut file = PlanFile {
            pmus: Vec::new(),
            dulrs: Vec::new(),
            pdcs: Vec::new(),
        };
        for i in 0..n {
            if self.pmu_at(i) {
                let mut observes: Vec<u32> =
                    (0..n).filter(|&j| self.pmu_observe(i, j)).map(&id).collect();
                observes.sort_unstable();
                file.pmus.push(PmuEntry {
                    bus: id(i),
                    observes,
                    pdc: route_of(i),
                });
            }
            for j in 0..n {
                if self.relay(i, j) {
                    file.dulrs.push(DulrEntry {
                        bus: id(i),
                        line_to: id(j),
                        pdc: route_of(i),
                    });
                }
            }
        }
        file.pdcs = (0..n).filter(|&i| self.pdc(i)).map(&id).collect();
        serde_json::to_string_pretty(&file).expect("plan serialization cannot fail")
    }

    /// Human-readable report in the `i(a,b,...)->j` notation.
    pub fn format_report(&self, network: &PowerNetwork) -> String {
        let n = self.n;
        let id = |i: usize| network.bus_id(i);
        let route_of = |i: usize| -> String {
            match (0..n).find(|&j| self.assignment(i, j)) {
                Some(j) => id(j).to_string(),
                None => "?".to_string(),
            }
        };
        let mut pmus = Vec::new();
        let mut dulrs = Vec::new();
        for i in 0..n {
            if self.pmu_at(i) {
                let observes: Vec<String> = (0..n)
                    .filter(|&j| self.pmu_observe(i, j))
                    .map(|j| id(j).to_string())
                    .collect();
                pmus.push(format!("{}({})->{}", id(i), observes.join(","), route_of(i)));
            }
            for j in 0..n {
                if self.relay(i, j) {
                    dulrs.push(format!("{}({})->{}", id(i), id(j), route_of(i)));
                }
            }
        }
        let pdcs: Vec<String> = (0..n)
            .filter(|&i| self.pdc(i))
            .map(|i| id(i).to_string())
            .collect();
        let fmt_list = |items: &[String]| {
            if items.is_empty() {
                "N/A".to_string()
            } else {
                items.join(", ")
            }
        };
        format!(
            "PMUs:  {}\nDULRs: {}\nPDCs:  {}\n",
            fmt_list(&pmus),
            fmt_list(&dulrs),
            fmt_list(&pdcs)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case;

    fn nine() -> (PowerNetwork, CaseParameters, PlanningOptions) {
        let case = case::builtin("ieee9").unwrap();
        (case.network, case.params, case.options)
    }

    /// Reference plan from the minimum-cost solution of the nine-bus case:
    /// PMUs at 1, 2, 3; relays 4(6), 7(5), 9(8); single concentrator at 9.
    pub(crate) fn nine_bus_min_cost_plan(network: &PowerNetwork) -> PlacementPlan {
        let of = |id: u32| network.bus_index(id).unwrap();
        let mut plan = PlacementPlan::empty(network.bus_count());
        for bus in [1, 2, 3] {
            plan.set_pmu_observe(of(bus), of(bus), true);
        }
        for (at, toward) in [(4, 6), (7, 5), (9, 8)] {
            plan.set_relay(of(at), of(toward), true);
        }
        plan.set_pdc(of(9), true);
        for bus in [1, 2, 3, 4, 7, 9] {
            plan.set_assignment(of(bus), of(9), true);
        }
        plan
    }

    #[test]
    fn reference_plan_is_feasible() {
        let (network, params, options) = nine();
        let plan = nine_bus_min_cost_plan(&network);
        let violations = check_plan(&plan, &network, &params, &options);
        assert!(violations.is_empty(), "unexpected violations: {violations:?}");
    }

    #[test]
    fn empty_plan_fails_observability() {
        let (network, params, options) = nine();
        let plan = PlacementPlan::empty(network.bus_count());
        let violations = check_plan(&plan, &network, &params, &options);
        assert_eq!(
            violations
                .iter()
                .filter(|v| matches!(v, Violation::InsufficientObservability { .. }))
                .count(),
            9
        );
    }

    #[test]
    fn channel_limit_and_assignment_violations_are_named() {
        let (network, params, mut options) = nine();
        let of = |id: u32| network.bus_index(id).unwrap();
        // Two channels on the PMU at 9 exceed a tightened limit of one.
        options.channel_limit = Some(1);
        let mut plan = nine_bus_min_cost_plan(&network);
        plan.set_pmu_observe(of(9), of(9), true);
        plan.set_pmu_observe(of(9), of(6), true);
        plan.set_pmu_observe(of(9), of(8), true);
        let violations = check_plan(&plan, &network, &params, &options);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::ChannelLimitExceeded { bus: 9, used: 2, limit: 1 })));
        let options = nine().2;

        // Drop the assignment row of a device bus.
        let mut plan = nine_bus_min_cost_plan(&network);
        plan.set_assignment(of(4), of(9), false);
        let violations = check_plan(&plan, &network, &params, &options);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::UnassignedDeviceBus { bus: 4 })));

        // Route a device to a bus with no concentrator.
        let mut plan = nine_bus_min_cost_plan(&network);
        plan.set_assignment(of(4), of(9), false);
        plan.set_assignment(of(4), of(5), true);
        let violations = check_plan(&plan, &network, &params, &options);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::AssignmentToNonPdc { bus: 4, target: 5 })));
    }

    #[test]
    fn transformer_branches_carry_no_devices() {
        let (network, params, options) = nine();
        let of = |id: u32| network.bus_index(id).unwrap();
        let mut plan = nine_bus_min_cost_plan(&network);
        plan.set_relay(of(1), of(4), true);
        plan.set_assignment(of(1), of(9), true);
        let violations = check_plan(&plan, &network, &params, &options);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::RelayOnMissingBranch { i: 1, j: 4 })));
    }

    #[test]
    fn prohibited_installation_detected() {
        let (network, params, mut options) = nine();
        let of = |id: u32| network.bus_index(id).unwrap();
        options.prohibited.insert(of(4));
        let plan = nine_bus_min_cost_plan(&network);
        let violations = check_plan(&plan, &network, &params, &options);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::ProhibitedInstallation { bus: 4 })));
    }

    #[test]
    fn plan_json_round_trip() {
        let (network, _, _) = nine();
        let plan = nine_bus_min_cost_plan(&network);
        let text = plan.to_json(&network);
        let back = PlacementPlan::from_json(&text, &network).unwrap();
        assert_eq!(plan, back);
    }

    #[test]
    fn report_uses_arrow_notation() {
        let (network, _, _) = nine();
        let plan = nine_bus_min_cost_plan(&network);
        let report = plan.format_report(&network);
        assert!(report.contains("1(1)->9"));
        assert!(report.contains("4(6)->9"));
        assert!(report.contains("PDCs:  9"));
    }
}
