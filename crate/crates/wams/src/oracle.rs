//! Brute-force reference implementations used by the test suite and the
//! hidden fixture-regeneration command. Everything here is written as
//! plain nested loops straight from the definitions and shares no
//! evaluation code with the production paths: hop counts come from a
//! Floyd-Warshall pass instead of breadth-first search, observability and
//! costs are recomputed longhand, and placements are enumerated
//! exhaustively. Intentionally slow, intentionally simple.

use thiserror::Error;

use crate::contingency::ContingencyConfig;
use crate::network::{CaseParameters, PowerNetwork};
use crate::plan::{PlacementPlan, PlanningOptions};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("search space of roughly 2^{bits} placements exceeds the brute-force cap")]
    TooLarge { bits: u32 },
    #[error("all objective weights are zero")]
    NoWeights,
    #[error("no feasible placement exists")]
    Infeasible,
}

/// Scalarization weights in model units (cost in cents).
#[derive(Clone, Copy, Debug)]
pub struct ObjectiveWeights {
    pub cost: f64,
    pub unreliability: f64,
    pub traffic: f64,
}

impl ObjectiveWeights {
    pub fn cost_only() -> ObjectiveWeights {
        ObjectiveWeights {
            cost: 1.0,
            unreliability: 0.0,
            traffic: 0.0,
        }
    }
}

/// Hop counts by Floyd-Warshall over the communication edges.
fn floyd_warshall_hops(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let inf = u32::MAX / 4;
    let mut dist = vec![vec![inf; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        dist[a][b] = 1;
        dist[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    dist
}

/// Is bus `target` observable under the outage set, by direct reading of
/// the definitions: some device measures it at home or across a live
/// measurable branch.
fn observes(
    plan: &PlacementPlan,
    network: &PowerNetwork,
    target: usize,
    outages: &[usize],
) -> bool {
    let n = network.bus_count();
    if plan.pmu_observe(target, target) {
        return true;
    }
    for j in 0..n {
        if plan.relay(target, j) {
            return true;
        }
    }
    for j in 0..n {
        if j == target || !network.is_observable_branch(target, j) {
            continue;
        }
        let branch = network
            .branch_index(target, j)
            .expect("measurable branch exists");
        if outages.contains(&branch) {
            continue;
        }
        if plan.pmu_observe(j, target) || plan.relay(j, target) {
            return true;
        }
    }
    false
}

/// Exact unreliability by complete enumeration of all outage subsets of
/// the failable branches.
pub fn brute_force_unreliability(
    plan: &PlacementPlan,
    network: &PowerNetwork,
    failable: &[usize],
) -> Result<f64, OracleError> {
    if failable.len() > 20 {
        return Err(OracleError::TooLarge {
            bits: failable.len() as u32,
        });
    }
    let mut failable = failable.to_vec();
    failable.sort_unstable();
    failable.dedup();
    let n = network.bus_count();
    // Subsets visited in the same lexicographic order the production
    // enumeration uses, summed per bus then across buses, so full-order
    // results are comparable bit for bit.
    let mut per_bus = vec![0.0f64; n];
    let mut current: Vec<usize> = Vec::new();
    fn recurse(
        start: usize,
        failable: &[usize],
        current: &mut Vec<usize>,
        plan: &PlacementPlan,
        network: &PowerNetwork,
        per_bus: &mut [f64],
    ) {
        let mut probability = 1.0f64;
        for &idx in failable {
            let p = network.branches()[idx].reliability;
            if current.contains(&idx) {
                probability *= 1.0 - p;
            } else {
                probability *= p;
            }
        }
        for (target, acc) in per_bus.iter_mut().enumerate() {
            if !observes(plan, network, target, current) {
                *acc += probability;
            }
        }
        for pos in start..failable.len() {
            current.push(failable[pos]);
            recurse(pos + 1, failable, current, plan, network, per_bus);
            current.pop();
        }
    }
    recurse(0, &failable, &mut current, plan, network, &mut per_bus);
    Ok(per_bus.iter().sum())
}

/// Every admissible PMU configuration of one bus: nothing, or a PMU with
/// any channel subset within the limit.
fn pmu_choices(
    network: &PowerNetwork,
    options: &PlanningOptions,
    limit: usize,
    bus: usize,
) -> Vec<Vec<usize>> {
    // Entry semantics: empty marker = no PMU; otherwise [bus, channels...].
    if options.prohibited.contains(&bus) {
        return vec![vec![]];
    }
    if let Some(observed) = options.existing_pmus.get(&bus) {
        let mut fixed = vec![bus];
        fixed.extend(observed.iter().copied().filter(|&j| j != bus));
        return vec![fixed];
    }
    let neighbors = network.observable_neighbors(bus);
    let mut choices = vec![vec![]];
    let masks = 1usize << neighbors.len();
    for mask in 0..masks {
        if (mask.count_ones() as usize) > limit {
            continue;
        }
        let mut choice = vec![bus];
        for (bit, &j) in neighbors.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                choice.push(j);
            }
        }
        choices.push(choice);
    }
    choices
}

/// Exhaustive search for the scalarized optimum over tiny networks:
/// enumerate every PMU/channel configuration and relay pattern, complete
/// each with its best concentrator subset and routing, and keep the best
/// feasible candidate. Runs its own state enumeration and evaluation.
pub fn brute_force_plan(
    network: &PowerNetwork,
    params: &CaseParameters,
    options: &PlanningOptions,
    weights: &ObjectiveWeights,
    contingency: &ContingencyConfig,
) -> Result<(PlacementPlan, f64), OracleError> {
    if weights.cost == 0.0 && weights.unreliability == 0.0 && weights.traffic == 0.0 {
        return Err(OracleError::NoWeights);
    }
    let n = network.bus_count();
    let limit = options.effective_channel_limit(params) as usize;

    let per_bus_choices: Vec<Vec<Vec<usize>>> =
        (0..n).map(|bus| pmu_choices(network, options, limit, bus)).collect();
    let relay_slots: Vec<(usize, usize)> = {
        let mut slots = Vec::new();
        for i in 0..n {
            if options.prohibited.contains(&i) {
                continue;
            }
            for &j in network.observable_neighbors(i) {
                slots.push((i, j));
            }
        }
        slots
    };

    let mut bits = relay_slots.len() as f64;
    for choices in &per_bus_choices {
        bits += (choices.len() as f64).log2();
    }
    if bits > 24.0 {
        return Err(OracleError::TooLarge { bits: bits as u32 });
    }

    // Own outage enumeration, lexicographic, probabilities in branch order.
    let mut failable = contingency.failable.clone();
    failable.sort_unstable();
    failable.dedup();
    let mut outage_sets: Vec<Vec<usize>> = Vec::new();
    fn collect(
        start: usize,
        failable: &[usize],
        max_order: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        out.push(current.clone());
        if current.len() == max_order {
            return;
        }
        for pos in start..failable.len() {
            current.push(failable[pos]);
            collect(pos + 1, failable, max_order, current, out);
            current.pop();
        }
    }
    collect(
        0,
        &failable,
        contingency.max_order,
        &mut Vec::new(),
        &mut outage_sets,
    );
    let probabilities: Vec<f64> = outage_sets
        .iter()
        .map(|outages| {
            let mut p = 1.0f64;
            for &idx in &failable {
                let r = network.branches()[idx].reliability;
                p *= if outages.contains(&idx) { 1.0 - r } else { r };
            }
            p
        })
        .collect();

    let hops = floyd_warshall_hops(n, &network.ci_edges());
    let controller = network.controller();
    let route_cost = |i: usize, j: usize| -> f64 {
        (hops[i][j] as f64 + hops[j][controller] as f64 * params.compression_ratio)
            * params.message_rate
            * (network.degree(i) as f64 + 1.0)
    };

    let mut best: Option<(PlacementPlan, f64)> = None;

    let relay_masks = 1usize << relay_slots.len();
    let mut pmu_cursor = vec![0usize; n];
    'outer: loop {
        // Current PMU configuration.
        let mut base = PlacementPlan::empty(n);
        for (bus, cursor) in pmu_cursor.iter().enumerate() {
            let choice = &per_bus_choices[bus][*cursor];
            if let Some((&head, channels)) = choice.split_first() {
                base.set_pmu_observe(head, head, true);
                for &j in channels {
                    base.set_pmu_observe(head, j, true);
                }
            }
        }

        for relay_mask in 0..relay_masks {
            let mut plan = base.clone();
            for (bit, &(i, j)) in relay_slots.iter().enumerate() {
                if relay_mask & (1 << bit) != 0 {
                    plan.set_relay(i, j, true);
                }
            }

            // Base-state observability with redundancy, counted longhand.
            let mut feasible = true;
            for target in 0..n {
                let mut observers = 0u32;
                for j in 0..n {
                    let across =
                        j == target || network.is_observable_branch(target, j);
                    if across && (plan.pmu_observe(j, target) || plan.relay(j, target)) {
                        observers += if plan.pmu_observe(j, target) { 1 } else { 0 }
                            + if plan.relay(j, target) { 1 } else { 0 };
                    }
                    if plan.relay(target, j) {
                        observers += 1;
                    }
                }
                if observers < options.redundancy_of(target) + 1 {
                    feasible = false;
                    break;
                }
            }
            if !feasible {
                continue;
            }

            // Device hardware and interruption cost (concentrators later).
            let mut device_cents: i64 = 0;
            for i in 0..n {
                if plan.pmu_at(i) && !options.existing_pmus.contains_key(&i) {
                    device_cents += params.pmu_cost(i).cents();
                }
                for j in 0..n {
                    if plan.relay(i, j) {
                        device_cents += params.dulr_cost(i, j).cents();
                    }
                }
            }
            for (k, members) in network.substations().iter().enumerate() {
                let touched = members.iter().any(|&i| {
                    (0..n).any(|j| plan.pmu_observe(i, j) || plan.relay(i, j))
                });
                let free = members
                    .iter()
                    .any(|i| options.existing_pmus.contains_key(i));
                if touched && !free {
                    device_cents += params.interrupt_cost(network, k).cents();
                }
            }

            // Unreliability over the enumerated states.
            let mut unreliability = 0.0f64;
            if weights.unreliability != 0.0 || options.unreliability_cap.is_some() {
                let mut per_bus = vec![0.0f64; n];
                for (outages, &p) in outage_sets.iter().zip(&probabilities) {
                    for (target, acc) in per_bus.iter_mut().enumerate() {
                        if !observes(&plan, network, target, outages) {
                            *acc += p;
                        }
                    }
                }
                unreliability = per_bus.iter().sum();
            }
            if let Some(cap) = options.unreliability_cap {
                if unreliability > cap {
                    continue;
                }
            }

            // Best concentrator subset and routing for this device set.
            let hosts: Vec<usize> = (0..n).filter(|&i| plan.hosts_device(i)).collect();
            let subsets = 1usize << n;
            for pdc_mask in 1..subsets {
                let mut cents = device_cents;
                for i in 0..n {
                    if pdc_mask & (1 << i) != 0 {
                        cents += params.pdc_cost(i).cents();
                    }
                }
                let mut traffic = 0.0f64;
                let mut routes = Vec::with_capacity(hosts.len());
                for &i in &hosts {
                    let mut pick: Option<(usize, f64)> = None;
                    for j in 0..n {
                        if pdc_mask & (1 << j) == 0 {
                            continue;
                        }
                        let cost = route_cost(i, j);
                        let better = match pick {
                            None => true,
                            Some((_, best)) => cost < best - 1e-12,
                        };
                        if better {
                            pick = Some((j, cost));
                        }
                    }
                    let (j, cost) = pick.expect("subset is nonempty");
                    traffic += cost;
                    routes.push((i, j));
                }
                if let Some(budget) = options.budget_cap {
                    if cents > budget.cents() {
                        continue;
                    }
                }
                if let Some(caps) = Some(&options.traffic_caps) {
                    let violates = routes.iter().any(|&(i, j)| {
                        caps.get(&(i, j)).is_some_and(|&cap| {
                            params.message_rate * (network.degree(i) as f64 + 1.0) > cap
                        })
                    });
                    if violates {
                        continue;
                    }
                }
                let value = weights.cost * cents as f64
                    + weights.unreliability * unreliability
                    + weights.traffic * traffic;
                let better = match &best {
                    None => true,
                    Some((_, incumbent)) => value < *incumbent - 1e-9,
                };
                if better {
                    let mut complete = plan.clone();
                    for i in 0..n {
                        complete.set_pdc(i, pdc_mask & (1 << i) != 0);
                    }
                    for &(i, j) in &routes {
                        complete.set_assignment(i, j, true);
                    }
                    best = Some((complete, value));
                }
            }
        }

        // Advance the mixed-radix PMU cursor.
        for bus in 0..=n {
            if bus == n {
                break 'outer;
            }
            pmu_cursor[bus] += 1;
            if pmu_cursor[bus] < per_bus_choices[bus].len() {
                continue 'outer;
            }
            pmu_cursor[bus] = 0;
        }
    }

    best.ok_or(OracleError::Infeasible)
}
