//! Solver-independent evaluation of the three planning objectives:
//! construction cost, unreliability and synchrophasor data traffic. Used
//! for reporting and for cross-checking every optimization result.

use thiserror::Error;

use crate::contingency::{unreliability, ContingencySet};
use crate::network::{CaseParameters, DistanceMatrix, Money, PowerNetwork};
use crate::plan::{PlacementPlan, PlanningOptions};

/// The three planning objectives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ObjectiveKind {
    Cost,
    Unreliability,
    Traffic,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [
        ObjectiveKind::Cost,
        ObjectiveKind::Unreliability,
        ObjectiveKind::Traffic,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ObjectiveKind::Cost => "cost",
            ObjectiveKind::Unreliability => "unreliability",
            ObjectiveKind::Traffic => "traffic",
        }
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cost" => Ok(ObjectiveKind::Cost),
            "unreliability" | "reliability" => Ok(ObjectiveKind::Unreliability),
            "traffic" => Ok(ObjectiveKind::Traffic),
            other => Err(format!(
                "unknown objective {other:?}; expected cost, unreliability or traffic"
            )),
        }
    }
}

/// One point in objective space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveVector {
    pub cost: Money,
    /// Probability-weighted unobservable bus-state mass.
    pub unreliability: f64,
    /// Bit-hops per second.
    pub traffic: f64,
}

impl ObjectiveVector {
    /// Weak dominance: no worse in every objective, strictly better in at
    /// least one.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        let no_worse = self.cost <= other.cost
            && self.unreliability <= other.unreliability
            && self.traffic <= other.traffic;
        let better = self.cost < other.cost
            || self.unreliability < other.unreliability
            || self.traffic < other.traffic;
        no_worse && better
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.cost.dollars(), self.unreliability, self.traffic]
    }

    /// Objective value in model units (cost in cents, matching the linear
    /// cost expression of the optimization model).
    pub fn get(&self, kind: ObjectiveKind) -> f64 {
        match kind {
            ObjectiveKind::Cost => self.cost.cents() as f64,
            ObjectiveKind::Unreliability => self.unreliability,
            ObjectiveKind::Traffic => self.traffic,
        }
    }
}

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("devices at bus {bus} report to {count} concentrators, expected exactly one")]
    BadAssignmentRow { bus: u32, count: usize },
    #[error("bus {bus} reports to bus {target}, which hosts no concentrator")]
    AssignmentToNonPdc { bus: u32, target: u32 },
}

/// Total hardware plus substation-interruption cost of a plan.
///
/// Indicator variables are re-derived from the control matrices, never
/// trusted from the caller. Pre-installed PMUs carry no hardware cost and
/// their substations already received the installation outage, so those
/// interruptions are free as well.
pub fn construction_cost(
    plan: &PlacementPlan,
    network: &PowerNetwork,
    params: &CaseParameters,
    options: &PlanningOptions,
) -> Money {
    let n = network.bus_count();
    let derived = plan.derived(network, options);
    let mut total = Money::ZERO;
    for i in 0..n {
        if derived.pmu_paid[i] {
            total += params.pmu_cost(i);
        }
        for j in 0..n {
            if plan.relay(i, j) {
                total += params.dulr_cost(i, j);
            }
        }
        if plan.pdc(i) {
            total += params.pdc_cost(i);
        }
    }
    let free = options.interrupt_free_substations(network);
    for (k, &interrupted) in derived.interrupted.iter().enumerate() {
        if interrupted && !free.contains(&k) {
            total += params.interrupt_cost(network, k);
        }
    }
    total
}

/// Maximum synchrophasor data traffic of a plan in bit-hops per second:
/// every device-hosting bus streams at the bus's worst-case rate to its
/// concentrator, which relays a compressed stream to the controller.
pub fn data_traffic(
    plan: &PlacementPlan,
    distances: &DistanceMatrix,
    network: &PowerNetwork,
    params: &CaseParameters,
) -> Result<f64, TrafficError> {
    let n = network.bus_count();
    let controller = network.controller();
    let mut total = 0.0f64;
    for i in 0..n {
        let hosts = plan.hosts_device(i);
        let routes: Vec<usize> = (0..n).filter(|&j| plan.assignment(i, j)).collect();
        let expected = usize::from(hosts);
        if routes.len() != expected {
            return Err(TrafficError::BadAssignmentRow {
                bus: network.bus_id(i),
                count: routes.len(),
            });
        }
        for &j in &routes {
            if !plan.pdc(j) {
                return Err(TrafficError::AssignmentToNonPdc {
                    bus: network.bus_id(i),
                    target: network.bus_id(j),
                });
            }
            total += traffic_coefficient(distances, network, params, i, j, controller);
        }
    }
    Ok(total)
}

/// Traffic contributed by routing the devices of bus `i` to a concentrator
/// at bus `j`: the raw stream travels `q_ij` hops and the compressed stream
/// `q_jc` hops more.
pub fn traffic_coefficient(
    distances: &DistanceMatrix,
    network: &PowerNetwork,
    params: &CaseParameters,
    i: usize,
    j: usize,
    controller: usize,
) -> f64 {
    let hops = distances.get(i, j) as f64
        + distances.get(j, controller) as f64 * params.compression_ratio;
    hops * params.message_rate * (network.degree(i) as f64 + 1.0)
}

/// Evaluates all three objectives of a plan.
pub fn evaluate(
    plan: &PlacementPlan,
    network: &PowerNetwork,
    params: &CaseParameters,
    options: &PlanningOptions,
    contingencies: &ContingencySet,
    distances: &DistanceMatrix,
) -> Result<ObjectiveVector, TrafficError> {
    Ok(ObjectiveVector {
        cost: construction_cost(plan, network, params, options),
        unreliability: unreliability(plan, contingencies).total,
        traffic: data_traffic(plan, distances, network, params)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case;
    use crate::contingency::{enumerate_states, ContingencyConfig};
    use crate::fixtures;

    #[test]
    fn table_two_costs_are_exact() {
        let case = case::builtin("ieee9").unwrap();
        for k in 1..=7 {
            let plan = fixtures::table2_plan(&case.network, k);
            let cost = construction_cost(&plan, &case.network, &case.params, &case.options);
            assert_eq!(
                cost.cents(),
                fixtures::TABLE2_COST_CENTS[k - 1],
                "solution {k}"
            );
        }
    }

    #[test]
    fn empty_plan_costs_nothing() {
        let case = case::builtin("ieee9").unwrap();
        let plan = PlacementPlan::empty(9);
        let cost = construction_cost(&plan, &case.network, &case.params, &case.options);
        assert_eq!(cost, Money::ZERO);
    }

    #[test]
    fn existing_pmu_hardware_and_outage_are_free() {
        // Pre-installed PMU at bus 7 observing {5,7,8}: the plan keeps it,
        // adds PMUs at 1,2,3, relays 4(6) and 9(8), one concentrator at 2.
        // Only substations {1,4} and {3,9} bill an interruption.
        let case = case::builtin("ieee9").unwrap();
        let network = &case.network;
        let of = |id: u32| network.bus_index(id).unwrap();
        let mut options = case.options.clone();
        options
            .existing_pmus
            .insert(of(7), [of(5), of(7), of(8)].into_iter().collect());

        let mut plan = PlacementPlan::empty(9);
        for bus in [1, 2, 3, 7] {
            plan.set_pmu_observe(of(bus), of(bus), true);
        }
        plan.set_pmu_observe(of(7), of(5), true);
        plan.set_pmu_observe(of(7), of(8), true);
        plan.set_relay(of(4), of(6), true);
        plan.set_relay(of(9), of(8), true);
        plan.set_pdc(of(2), true);
        for bus in [1, 2, 3, 4, 7, 9] {
            plan.set_assignment(of(bus), of(2), true);
        }

        let cost = construction_cost(&plan, network, &case.params, &options);
        assert_eq!(cost.cents(), 12_450_212);
    }

    #[test]
    fn traffic_depends_only_on_hosting_set_and_routing() {
        let case = case::builtin("ieee9").unwrap();
        let q = case.network.hop_distances().unwrap();
        let d1 = data_traffic(
            &fixtures::table2_plan(&case.network, 1),
            &q,
            &case.network,
            &case.params,
        )
        .unwrap();
        let d2 = data_traffic(
            &fixtures::table2_plan(&case.network, 2),
            &q,
            &case.network,
            &case.params,
        )
        .unwrap();
        // Identical device-hosting buses and identical routing: bit-equal.
        assert_eq!(d1, d2);

        // Spreading the same devices over three concentrators cuts traffic.
        let d3 = data_traffic(
            &fixtures::table2_plan(&case.network, 3),
            &q,
            &case.network,
            &case.params,
        )
        .unwrap();
        assert!(d3 < d1);
    }

    #[test]
    fn reference_traffic_value() {
        // Hand evaluation for the minimum-cost plan: hosts 1,2,3 (degree 1)
        // and 4,7,9 (degree 3), all routed to bus 9, controller at 8.
        let case = case::builtin("ieee9").unwrap();
        let q = case.network.hop_distances().unwrap();
        let plan = fixtures::table2_plan(&case.network, 1);
        let traffic = data_traffic(&plan, &q, &case.network, &case.params).unwrap();
        let eta = 0.0877;
        let expected = 20160.0
            * (2.0 * ((3.0 + eta) + (3.0 + eta) + (1.0 + eta))
                + 4.0 * ((2.0 + eta) + (2.0 + eta) + eta));
        assert!((traffic - expected).abs() < 1e-6, "{traffic} vs {expected}");
    }

    #[test]
    fn colocated_concentrator_at_controller_is_free() {
        let case = case::builtin("ieee9").unwrap();
        let network = &case.network;
        let of = |id: u32| network.bus_index(id).unwrap();
        let mut plan = PlacementPlan::empty(9);
        plan.set_pmu_observe(of(8), of(8), true);
        plan.set_pdc(of(8), true);
        plan.set_assignment(of(8), of(8), true);
        let q = network.hop_distances().unwrap();
        let traffic = data_traffic(&plan, &q, network, &case.params).unwrap();
        assert_eq!(traffic, 0.0);
    }

    #[test]
    fn dangling_assignments_are_rejected() {
        let case = case::builtin("ieee9").unwrap();
        let network = &case.network;
        let q = network.hop_distances().unwrap();
        let of = |id: u32| network.bus_index(id).unwrap();

        let mut plan = fixtures::table2_plan(network, 1);
        plan.set_assignment(of(4), of(9), false);
        match data_traffic(&plan, &q, network, &case.params) {
            Err(TrafficError::BadAssignmentRow { bus: 4, count: 0 }) => {}
            other => panic!("unexpected result {other:?}"),
        }

        let mut plan = fixtures::table2_plan(network, 1);
        plan.set_pdc(of(9), false);
        plan.set_pdc(of(5), true);
        match data_traffic(&plan, &q, network, &case.params) {
            Err(TrafficError::AssignmentToNonPdc { target: 9, .. }) => {}
            other => panic!("unexpected result {other:?}"),
        }
    }

    #[test]
    fn evaluate_composes_components() {
        let case = case::builtin("ieee9").unwrap();
        let network = &case.network;
        let set = enumerate_states(network, &ContingencyConfig::default_for(network)).unwrap();
        let q = network.hop_distances().unwrap();
        let plan = fixtures::table2_plan(network, 4);
        let vector = evaluate(&plan, network, &case.params, &case.options, &set, &q).unwrap();
        assert_eq!(vector.cost.cents(), 21_846_845);
        assert_eq!(vector.unreliability, 0.0);
        assert!(vector.traffic > 0.0);
    }

    #[test]
    fn cost_is_additive_across_disjoint_plans() {
        let case = case::builtin("ieee9").unwrap();
        let network = &case.network;
        let of = |id: u32| network.bus_index(id).unwrap();
        // Plan A: PMU + concentrator in substation {1,4}.
        let mut a = PlacementPlan::empty(9);
        a.set_pmu_observe(of(1), of(1), true);
        a.set_pdc(of(1), true);
        a.set_assignment(of(1), of(1), true);
        // Plan B: relay + concentrator in substation {6}.
        let mut b = PlacementPlan::empty(9);
        b.set_relay(of(6), of(9), true);
        b.set_pdc(of(6), true);
        b.set_assignment(of(6), of(6), true);
        // Union.
        let mut u = a.clone();
        u.set_relay(of(6), of(9), true);
        u.set_pdc(of(6), true);
        u.set_assignment(of(6), of(6), true);
        let cost = |p: &PlacementPlan| {
            construction_cost(p, network, &case.params, &case.options).cents()
        };
        assert_eq!(cost(&u), cost(&a) + cost(&b));
    }
}
