//! Translation of a case into a 0-1 integer linear program: dense binary
//! variable blocks for installations, channels, concentrators, routing and
//! per-state observability, the coupling and placement constraints over
//! them, and the three linear objective expressions.

use std::collections::BTreeMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::contingency::ContingencySet;
use crate::network::{CaseParameters, PowerNetwork};
use crate::objectives::ObjectiveKind;
use crate::plan::{check_plan, PlacementPlan, PlanningOptions};

/// Role of a decision variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarKind {
    /// `m[i][j]`: PMU at `i` (diagonal) or channel on branch `(i,j)`.
    PmuObserve(usize, usize),
    /// `d[i][j]`: line relay at the `i` end of branch `(i,j)`.
    Relay(usize, usize),
    /// `p[i]`: data concentrator at bus `i`.
    Pdc(usize),
    /// `l[i][j]`: devices at `i` report to the concentrator at `j`.
    Assign(usize, usize),
    /// `m'[i]`: PMU hardware is paid for at bus `i`.
    PmuPaid(usize),
    /// `d'[i]`: some measurement device is hosted at bus `i`.
    DeviceAt(usize),
    /// `u[k]`: substation `k` is interrupted for installation work.
    Interrupted(usize),
    /// `o[i][s]`: bus `i` is observable in enumerated state `s`.
    Observable(usize, usize),
}

#[derive(Clone, Debug)]
pub struct MilpVariable {
    pub kind: VarKind,
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl MilpVariable {
    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LinConstraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// Linear expression with a constant offset, used for objectives.
#[derive(Clone, Debug, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn value(&self, assignment: &[f64]) -> f64 {
        let mut acc = self.constant;
        for &(var, coef) in &self.terms {
            acc += coef * assignment[var];
        }
        acc
    }
}

/// The objective selected for a single solve.
#[derive(Clone, Debug)]
pub struct ScalarObjective {
    pub label: String,
    pub expr: LinExpr,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(
        "bus {bus} cannot reach the required {need} observing devices (at most {max} possible); \
         the placement rules make the case infeasible"
    )]
    Unsatisfiable { bus: u32, need: u32, max: u32 },
    #[error("invalid options: {what}")]
    BadOptions { what: String },
}

/// A fully indexed 0-1 program. Structurally impossible assignments are
/// encoded by fixing variable bounds, so the dense variable blocks keep a
/// predictable shape.
#[derive(Clone, Debug)]
pub struct MilpProblem {
    pub variables: Vec<MilpVariable>,
    pub constraints: Vec<LinConstraint>,
    pub cost: LinExpr,
    pub unreliability: LinExpr,
    pub traffic: LinExpr,
    pub objective: Option<ScalarObjective>,
    index: BTreeMap<VarKind, usize>,
    bus_count: usize,
    state_count: usize,
}

/// Variable-family counts reported by the model audit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ModelStats {
    pub pmu_observe: usize,
    pub relay: usize,
    pub pdc: usize,
    pub assign: usize,
    pub pmu_paid: usize,
    pub device_at: usize,
    pub interrupted: usize,
    pub observable: usize,
    pub fixed: usize,
    pub constraints: usize,
}

impl ModelStats {
    pub fn total_variables(&self) -> usize {
        self.pmu_observe
            + self.relay
            + self.pdc
            + self.assign
            + self.pmu_paid
            + self.device_at
            + self.interrupted
            + self.observable
    }
}

impl MilpProblem {
    pub fn bus_count(&self) -> usize {
        self.bus_count
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn var(&self, kind: VarKind) -> usize {
        self.index[&kind]
    }

    pub fn objective_expr(&self, kind: ObjectiveKind) -> &LinExpr {
        match kind {
            ObjectiveKind::Cost => &self.cost,
            ObjectiveKind::Unreliability => &self.unreliability,
            ObjectiveKind::Traffic => &self.traffic,
        }
    }

    /// Selects a single objective: a weighted combination of the three
    /// objective expressions. Weights refer to the expressions as-is; the
    /// caller normalizes if it wants comparable magnitudes.
    pub fn scalarized(&self, label: &str, weights: &[(ObjectiveKind, f64)]) -> MilpProblem {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        let mut constant = 0.0;
        for &(kind, weight) in weights {
            if weight == 0.0 {
                continue;
            }
            let expr = self.objective_expr(kind);
            constant += weight * expr.constant;
            for &(var, coef) in &expr.terms {
                *merged.entry(var).or_insert(0.0) += weight * coef;
            }
        }
        let mut clone = self.clone();
        clone.objective = Some(ScalarObjective {
            label: label.to_string(),
            expr: LinExpr {
                terms: merged.into_iter().collect(),
                constant,
            },
        });
        clone
    }

    /// Appends `objective <= bound` as a linear constraint.
    pub fn add_objective_bound(&mut self, kind: ObjectiveKind, bound: f64, name: &str) {
        let expr = self.objective_expr(kind).clone();
        self.constraints.push(LinConstraint {
            name: name.to_string(),
            terms: expr.terms,
            cmp: Cmp::Le,
            rhs: bound - expr.constant,
        });
    }

    /// Checks one assignment against every constraint and bound; returns
    /// the name of the first violated row.
    pub fn first_violation(&self, assignment: &[f64], tol: f64) -> Option<String> {
        for (idx, var) in self.variables.iter().enumerate() {
            let x = assignment[idx];
            if x < var.lower - tol || x > var.upper + tol {
                return Some(format!("bound on {}", var.name));
            }
        }
        for con in &self.constraints {
            let lhs: f64 = con.terms.iter().map(|&(v, c)| c * assignment[v]).sum();
            let scale = 1.0 + con.terms.iter().map(|&(_, c)| c.abs()).fold(0.0, f64::max);
            let ok = match con.cmp {
                Cmp::Le => lhs <= con.rhs + tol * scale,
                Cmp::Ge => lhs >= con.rhs - tol * scale,
                Cmp::Eq => (lhs - con.rhs).abs() <= tol * scale,
            };
            if !ok {
                return Some(con.name.clone());
            }
        }
        None
    }

    pub fn stats(&self) -> ModelStats {
        let mut stats = ModelStats {
            constraints: self.constraints.len(),
            ..ModelStats::default()
        };
        for var in &self.variables {
            match var.kind {
                VarKind::PmuObserve(..) => stats.pmu_observe += 1,
                VarKind::Relay(..) => stats.relay += 1,
                VarKind::Pdc(..) => stats.pdc += 1,
                VarKind::Assign(..) => stats.assign += 1,
                VarKind::PmuPaid(..) => stats.pmu_paid += 1,
                VarKind::DeviceAt(..) => stats.device_at += 1,
                VarKind::Interrupted(..) => stats.interrupted += 1,
                VarKind::Observable(..) => stats.observable += 1,
            }
            if var.is_fixed() {
                stats.fixed += 1;
            }
        }
        stats
    }
}

/// Builds the full program for a case: installation coupling, routing,
/// per-state observability, base-state redundancy, channel limits,
/// prohibitions, pre-installed equipment, and the optional cap
/// constraints, plus the three objectives.
pub fn build_model(
    network: &PowerNetwork,
    params: &CaseParameters,
    options: &PlanningOptions,
    contingencies: &ContingencySet,
) -> Result<MilpProblem, ModelError> {
    build_model_with_floor(network, params, options, contingencies, 0.0)
}

/// As [`build_model`], declaring observability variables only for states
/// with probability above `probability_floor`.
pub fn build_model_with_floor(
    network: &PowerNetwork,
    params: &CaseParameters,
    options: &PlanningOptions,
    contingencies: &ContingencySet,
    probability_floor: f64,
) -> Result<MilpProblem, ModelError> {
    let n = network.bus_count();
    let substations = network.substation_count();
    let id = |i: usize| network.bus_id(i);
    let prohibited = |i: usize| options.prohibited.contains(&i);
    let existing = |i: usize| options.existing_pmus.get(&i);
    let channel_limit = options.effective_channel_limit(params);

    check_reachability(network, options)?;

    let modeled_states: Vec<usize> = contingencies
        .states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.probability >= probability_floor)
        .map(|(idx, _)| idx)
        .collect();

    let mut variables = Vec::new();
    let mut index = BTreeMap::new();
    let mut add_var = |kind: VarKind, name: String, lower: f64, upper: f64| -> usize {
        let idx = variables.len();
        variables.push(MilpVariable {
            kind,
            name,
            lower,
            upper,
        });
        index.insert(kind, idx);
        idx
    };

    // Dense variable blocks. Channels and relays exist only on measurable
    // (non-transformer) branches; everything else is pinned to zero so the
    // audit sees the full matrices.
    for i in 0..n {
        for j in 0..n {
            let fixed: Option<f64> = if i == j {
                match (prohibited(i), existing(i)) {
                    (true, _) => Some(0.0),
                    (_, Some(_)) => Some(1.0),
                    _ => None,
                }
            } else if !network.is_observable_branch(i, j) || prohibited(i) {
                Some(0.0)
            } else if let Some(observed) = existing(i) {
                Some(if observed.contains(&j) { 1.0 } else { 0.0 })
            } else {
                None
            };
            let (lo, hi) = match fixed {
                Some(v) => (v, v),
                None => (0.0, 1.0),
            };
            add_var(
                VarKind::PmuObserve(i, j),
                format!("m_{}_{}", id(i), id(j)),
                lo,
                hi,
            );
        }
    }
    for i in 0..n {
        for j in 0..n {
            let free = i != j && network.is_observable_branch(i, j) && !prohibited(i);
            let hi = if free { 1.0 } else { 0.0 };
            add_var(VarKind::Relay(i, j), format!("d_{}_{}", id(i), id(j)), 0.0, hi);
        }
    }
    for i in 0..n {
        add_var(VarKind::Pdc(i), format!("p_{}", id(i)), 0.0, 1.0);
    }
    for i in 0..n {
        for j in 0..n {
            // A prohibited bus without a pre-installed PMU hosts nothing and
            // routes nothing.
            let hi = if prohibited(i) { 0.0 } else { 1.0 };
            add_var(VarKind::Assign(i, j), format!("l_{}_{}", id(i), id(j)), 0.0, hi);
        }
    }
    for i in 0..n {
        let (lo, hi) = if existing(i).is_some() || prohibited(i) {
            (0.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        add_var(VarKind::PmuPaid(i), format!("mp_{}", id(i)), lo, hi);
    }
    for i in 0..n {
        let (lo, hi) = if existing(i).is_some() {
            (1.0, 1.0)
        } else if prohibited(i) {
            (0.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        add_var(VarKind::DeviceAt(i), format!("dp_{}", id(i)), lo, hi);
    }
    let interrupt_free = options.interrupt_free_substations(network);
    for k in 0..substations {
        let lo = if interrupt_free.contains(&k) { 1.0 } else { 0.0 };
        add_var(VarKind::Interrupted(k), format!("u_{}", k + 1), lo, 1.0);
    }
    for i in 0..n {
        for &s in &modeled_states {
            add_var(
                VarKind::Observable(i, s),
                format!("o_{}_s{}", id(i), s),
                0.0,
                1.0,
            );
        }
    }

    let problem_index = index.clone();
    let var = |kind: VarKind| -> usize { problem_index[&kind] };
    let is_free = |idx: usize| -> bool { !variables[idx].is_fixed() };

    let mut constraints: Vec<LinConstraint> = Vec::new();

    // Channels require their PMU; the PMU cost indicator equals the
    // diagonal for buses that pay for their hardware.
    for i in 0..n {
        let mid = var(VarKind::PmuObserve(i, i));
        for &j in network.observable_neighbors(i) {
            let mij = var(VarKind::PmuObserve(i, j));
            if is_free(mij) {
                constraints.push(LinConstraint {
                    name: format!("chan_{}_{}", id(i), id(j)),
                    terms: vec![(mij, 1.0), (mid, -1.0)],
                    cmp: Cmp::Le,
                    rhs: 0.0,
                });
            }
        }
        let paid = var(VarKind::PmuPaid(i));
        if is_free(paid) || is_free(mid) {
            constraints.push(LinConstraint {
                name: format!("pmu_ind_{}", id(i)),
                terms: vec![(paid, 1.0), (mid, -1.0)],
                cmp: Cmp::Eq,
                rhs: 0.0,
            });
        }
    }

    // Device indicator: set when the bus hosts a PMU or any relay, and only
    // then, so routing rows and extraction stay exact.
    for i in 0..n {
        let dev = var(VarKind::DeviceAt(i));
        if !is_free(dev) {
            continue;
        }
        let mid = var(VarKind::PmuObserve(i, i));
        constraints.push(LinConstraint {
            name: format!("dev_pmu_{}", id(i)),
            terms: vec![(dev, 1.0), (mid, -1.0)],
            cmp: Cmp::Ge,
            rhs: 0.0,
        });
        let mut upper = vec![(dev, 1.0), (mid, -1.0)];
        for &j in network.observable_neighbors(i) {
            let dij = var(VarKind::Relay(i, j));
            constraints.push(LinConstraint {
                name: format!("dev_relay_{}_{}", id(i), id(j)),
                terms: vec![(dev, 1.0), (dij, -1.0)],
                cmp: Cmp::Ge,
                rhs: 0.0,
            });
            upper.push((dij, -1.0));
        }
        constraints.push(LinConstraint {
            name: format!("dev_cap_{}", id(i)),
            terms: upper,
            cmp: Cmp::Le,
            rhs: 0.0,
        });
    }

    // Substation interruption: any installation in the group interrupts it;
    // no installation leaves it untouched.
    for (k, members) in network.substations().iter().enumerate() {
        let uk = var(VarKind::Interrupted(k));
        if !is_free(uk) {
            continue;
        }
        let mut any: Vec<(usize, f64)> = vec![(uk, 1.0)];
        for &i in members {
            let mid = var(VarKind::PmuObserve(i, i));
            if is_free(mid) {
                constraints.push(LinConstraint {
                    name: format!("sub_pmu_{}_{}", k + 1, id(i)),
                    terms: vec![(uk, 1.0), (mid, -1.0)],
                    cmp: Cmp::Ge,
                    rhs: 0.0,
                });
                any.push((mid, -1.0));
            }
            for &j in network.observable_neighbors(i) {
                let dij = var(VarKind::Relay(i, j));
                if is_free(dij) {
                    constraints.push(LinConstraint {
                        name: format!("sub_relay_{}_{}_{}", k + 1, id(i), id(j)),
                        terms: vec![(uk, 1.0), (dij, -1.0)],
                        cmp: Cmp::Ge,
                        rhs: 0.0,
                    });
                    any.push((dij, -1.0));
                }
            }
        }
        constraints.push(LinConstraint {
            name: format!("sub_cap_{}", k + 1),
            terms: any,
            cmp: Cmp::Le,
            rhs: 0.0,
        });
    }

    // Routing: report to concentrators only, exactly one per device bus.
    for i in 0..n {
        if prohibited(i) {
            continue;
        }
        for j in 0..n {
            constraints.push(LinConstraint {
                name: format!("route_pdc_{}_{}", id(i), id(j)),
                terms: vec![(var(VarKind::Assign(i, j)), 1.0), (var(VarKind::Pdc(j)), -1.0)],
                cmp: Cmp::Le,
                rhs: 0.0,
            });
        }
        let mut terms: Vec<(usize, f64)> = (0..n)
            .map(|j| (var(VarKind::Assign(i, j)), 1.0))
            .collect();
        terms.push((var(VarKind::DeviceAt(i)), -1.0));
        constraints.push(LinConstraint {
            name: format!("route_one_{}", id(i)),
            terms,
            cmp: Cmp::Eq,
            rhs: 0.0,
        });
    }

    // Per-state observability: a bus may count as observable only when a
    // surviving branch or a local measurement still reaches it.
    for i in 0..n {
        for &s in &modeled_states {
            let state = &contingencies.states[s];
            let mut terms = vec![(var(VarKind::Observable(i, s)), 1.0)];
            push_observer_terms(network, i, Some(state), &var, &mut terms);
            constraints.push(LinConstraint {
                name: format!("obs_{}_s{}", id(i), s),
                terms,
                cmp: Cmp::Le,
                rhs: 0.0,
            });
        }
    }

    // Base-state observability with the required redundancy degree.
    for i in 0..n {
        let mut terms = Vec::new();
        push_observer_terms(network, i, None, &var, &mut terms);
        for term in &mut terms {
            term.1 = -term.1;
        }
        let need = options.redundancy_of(i) as f64 + 1.0;
        constraints.push(LinConstraint {
            name: format!("red_{}", id(i)),
            terms,
            cmp: Cmp::Ge,
            rhs: need,
        });
    }

    // Measurement channel budget per PMU.
    for i in 0..n {
        if prohibited(i) || existing(i).is_some() {
            continue;
        }
        let channels: Vec<(usize, f64)> = network
            .observable_neighbors(i)
            .iter()
            .map(|&j| (var(VarKind::PmuObserve(i, j)), 1.0))
            .collect();
        if channels.len() > channel_limit as usize {
            constraints.push(LinConstraint {
                name: format!("chan_cap_{}", id(i)),
                terms: channels,
                cmp: Cmp::Le,
                rhs: channel_limit as f64,
            });
        }
    }

    // Optional bandwidth caps on single device-to-concentrator streams.
    for (&(i, j), &cap) in &options.traffic_caps {
        let rate = params.message_rate * (network.degree(i) as f64 + 1.0);
        constraints.push(LinConstraint {
            name: format!("traffic_cap_{}_{}", id(i), id(j)),
            terms: vec![(var(VarKind::Assign(i, j)), rate)],
            cmp: Cmp::Le,
            rhs: cap,
        });
    }

    // Objectives.
    let mut cost = LinExpr::default();
    for i in 0..n {
        cost.terms
            .push((var(VarKind::PmuPaid(i)), params.pmu_cost(i).cents() as f64));
    }
    for i in 0..n {
        for &j in network.observable_neighbors(i) {
            cost.terms
                .push((var(VarKind::Relay(i, j)), params.dulr_cost(i, j).cents() as f64));
        }
    }
    for i in 0..n {
        cost.terms
            .push((var(VarKind::Pdc(i)), params.pdc_cost(i).cents() as f64));
    }
    for k in 0..substations {
        let price = if interrupt_free.contains(&k) {
            0.0
        } else {
            params.interrupt_cost(network, k).cents() as f64
        };
        if price != 0.0 {
            cost.terms.push((var(VarKind::Interrupted(k)), price));
        }
    }
    cost.terms.sort_by_key(|&(v, _)| v);

    let mut unreliability = LinExpr::default();
    for i in 0..n {
        for &s in &modeled_states {
            let p = contingencies.states[s].probability;
            unreliability
                .terms
                .push((var(VarKind::Observable(i, s)), -p));
            unreliability.constant += p;
        }
    }
    unreliability.terms.sort_by_key(|&(v, _)| v);

    let mut traffic = LinExpr::default();
    let distances = network
        .hop_distances()
        .expect("validated network has a connected communication topology");
    let controller = network.controller();
    for i in 0..n {
        for j in 0..n {
            let hops = distances.get(i, j) as f64
                + distances.get(j, controller) as f64 * params.compression_ratio;
            let coef = hops * params.message_rate * (network.degree(i) as f64 + 1.0);
            if coef != 0.0 {
                traffic.terms.push((var(VarKind::Assign(i, j)), coef));
            }
        }
    }
    traffic.terms.sort_by_key(|&(v, _)| v);

    let mut problem = MilpProblem {
        variables,
        constraints,
        cost,
        unreliability,
        traffic,
        objective: None,
        index,
        bus_count: n,
        state_count: modeled_states.len(),
    };

    if let Some(budget) = options.budget_cap {
        problem.add_objective_bound(ObjectiveKind::Cost, budget.cents() as f64, "budget_cap");
    }
    if let Some(cap) = options.unreliability_cap {
        problem.add_objective_bound(ObjectiveKind::Unreliability, cap, "unreliability_cap");
    }

    Ok(problem)
}

/// Terms of the devices able to observe bus `i`: the bus's own PMU, its own
/// relays, and channels or relays arriving over branches alive in `state`
/// (all branches when `state` is `None`).
fn push_observer_terms(
    network: &PowerNetwork,
    i: usize,
    state: Option<&crate::contingency::SystemState>,
    var: &dyn Fn(VarKind) -> usize,
    terms: &mut Vec<(usize, f64)>,
) {
    terms.push((var(VarKind::PmuObserve(i, i)), -1.0));
    for &j in network.observable_neighbors(i) {
        let alive = state.map_or(true, |s| s.connected(i, j));
        if alive {
            terms.push((var(VarKind::PmuObserve(j, i)), -1.0));
            terms.push((var(VarKind::Relay(j, i)), -1.0));
        }
        terms.push((var(VarKind::Relay(i, j)), -1.0));
    }
}

/// Pre-flight reachability: every bus must admit enough observers under the
/// prohibitions and pre-installed equipment before any solve is attempted.
fn check_reachability(network: &PowerNetwork, options: &PlanningOptions) -> Result<(), ModelError> {
    for i in 0..network.bus_count() {
        let mut max = 0u32;
        if !options.prohibited.contains(&i) {
            max += 1; // own PMU
            max += network.observable_neighbors(i).len() as u32; // own relays
        }
        for &j in network.observable_neighbors(i) {
            if options.prohibited.contains(&j) {
                continue;
            }
            if let Some(observed) = options.existing_pmus.get(&j) {
                if observed.contains(&i) {
                    max += 1; // the fixed channel
                }
                max += 1; // a relay may still be added at j
            } else {
                max += 2; // channel and relay
            }
        }
        let need = options.redundancy_of(i) + 1;
        if max < need {
            return Err(ModelError::Unsatisfiable {
                bus: network.bus_id(i),
                need,
                max,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("assignment length {got} does not match {want} variables")]
    WrongLength { got: usize, want: usize },
    #[error("variable {name} has non-binary value {value}")]
    NonBinary { name: String, value: f64 },
    #[error("assignment violates constraint {name}")]
    ConstraintViolated { name: String },
    #[error("indicator {name} disagrees with the control matrices")]
    IndicatorMismatch { name: String },
    #[error("extracted plan breaks placement rule: {0}")]
    PlanViolation(String),
}

/// Converts a feasible solver assignment into a plan. The assignment is
/// re-verified against every row, indicators are recomputed from the
/// control matrices and compared, and the resulting plan is audited by the
/// direct checker.
pub fn extract_plan(
    problem: &MilpProblem,
    assignment: &[f64],
    network: &PowerNetwork,
    params: &CaseParameters,
    options: &PlanningOptions,
) -> Result<PlacementPlan, ExtractError> {
    if assignment.len() != problem.variables.len() {
        return Err(ExtractError::WrongLength {
            got: assignment.len(),
            want: problem.variables.len(),
        });
    }
    let mut bits = vec![false; assignment.len()];
    for (idx, var) in problem.variables.iter().enumerate() {
        let x = assignment[idx];
        if (x - x.round()).abs() > 1e-6 || !(-0.5..=1.5).contains(&x) {
            return Err(ExtractError::NonBinary {
                name: var.name.clone(),
                value: x,
            });
        }
        bits[idx] = x.round() == 1.0;
    }
    if let Some(name) = problem.first_violation(assignment, 1e-6) {
        return Err(ExtractError::ConstraintViolated { name });
    }

    let n = problem.bus_count;
    let mut plan = PlacementPlan::empty(n);
    for (idx, var) in problem.variables.iter().enumerate() {
        if !bits[idx] {
            continue;
        }
        match var.kind {
            VarKind::PmuObserve(i, j) => plan.set_pmu_observe(i, j, true),
            VarKind::Relay(i, j) => plan.set_relay(i, j, true),
            VarKind::Pdc(i) => plan.set_pdc(i, true),
            VarKind::Assign(i, j) => plan.set_assignment(i, j, true),
            _ => {}
        }
    }

    let derived = plan.derived(network, options);
    for (idx, var) in problem.variables.iter().enumerate() {
        let expected = match var.kind {
            VarKind::PmuPaid(i) => Some(derived.pmu_paid[i]),
            VarKind::DeviceAt(i) => Some(derived.device_at[i]),
            VarKind::Interrupted(k) => Some(derived.interrupted[k]),
            _ => None,
        };
        if let Some(expected) = expected {
            // Interruption indicators of substations holding pre-installed
            // equipment are pinned on even when the plan adds nothing there.
            let pinned = var.lower == 1.0;
            if bits[idx] != expected && !(pinned && bits[idx]) {
                return Err(ExtractError::IndicatorMismatch {
                    name: var.name.clone(),
                });
            }
        }
    }

    let violations = check_plan(&plan, network, params, options);
    if let Some(first) = violations.first() {
        return Err(ExtractError::PlanViolation(first.to_string()));
    }
    Ok(plan)
}

/// Writes the program in LP text format with deterministic ordering and
/// stable variable names, suitable for hand-off to external solvers.
pub fn export_lp(problem: &MilpProblem, sink: &mut dyn Write) -> io::Result<()> {
    let fallback = ScalarObjective {
        label: "cost".to_string(),
        expr: problem.cost.clone(),
    };
    let objective = problem.objective.as_ref().unwrap_or(&fallback);
    let name_of = |idx: usize| problem.variables[idx].name.as_str();
    let write_row = |sink: &mut dyn Write,
                     head: String,
                     terms: &[(usize, f64)],
                     tail: &str|
     -> io::Result<()> {
        let mut line = head;
        let mut width = line.len();
        let mut first = true;
        for &(v, c) in terms {
            let piece = format_term(c, name_of(v), first);
            first = false;
            if width + piece.len() > 78 {
                line.push_str("\n   ");
                sink.write_all(line.as_bytes())?;
                line = String::new();
                width = 3;
            }
            width += piece.len();
            line.push_str(&piece);
        }
        line.push_str(tail);
        sink.write_all(line.as_bytes())?;
        writeln!(sink)
    };

    writeln!(sink, "\\ wams planning model: {}", objective.label)?;
    writeln!(sink, "Minimize")?;
    write_row(sink, " obj:".to_string(), &objective.expr.terms, "")?;
    writeln!(sink, "Subject To")?;
    for con in &problem.constraints {
        let op = match con.cmp {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        };
        let tail = format!(" {} {}", op, format_number(con.rhs));
        write_row(sink, format!(" {}:", con.name), &con.terms, &tail)?;
    }
    writeln!(sink, "Bounds")?;
    for var in &problem.variables {
        if var.is_fixed() {
            writeln!(sink, " {} = {}", var.name, format_number(var.lower))?;
        } else if var.lower != 0.0 {
            writeln!(sink, " {} >= {}", var.name, format_number(var.lower))?;
        }
    }
    writeln!(sink, "Binaries")?;
    let mut line = String::new();
    for var in &problem.variables {
        if line.len() + var.name.len() + 1 > 78 {
            writeln!(sink, " {line}")?;
            line.clear();
        }
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(&var.name);
    }
    if !line.is_empty() {
        writeln!(sink, " {line}")?;
    }
    writeln!(sink, "End")?;
    Ok(())
}

fn format_term(coef: f64, name: &str, first: bool) -> String {
    let sign = if coef < 0.0 {
        " - "
    } else if first {
        " "
    } else {
        " + "
    };
    let magnitude = coef.abs();
    if magnitude == 1.0 {
        format!("{sign}{name}")
    } else {
        format!("{sign}{} {name}", format_number(magnitude))
    }
}

fn format_number(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::case;
    use crate::contingency::{enumerate_states, ContingencyConfig};
    use crate::fixtures;

    fn nine_model() -> (crate::case::Case, ContingencySet, MilpProblem) {
        let case = case::builtin("ieee9").unwrap();
        let config = ContingencyConfig::default_for(&case.network);
        let set = enumerate_states(&case.network, &config).unwrap();
        let problem = build_model(&case.network, &case.params, &case.options, &set).unwrap();
        (case, set, problem)
    }

    #[test]
    fn nine_bus_variable_census() {
        let (_, _, problem) = nine_model();
        let stats = problem.stats();
        assert_eq!(stats.pmu_observe, 81);
        assert_eq!(stats.relay, 81);
        assert_eq!(stats.pdc, 9);
        assert_eq!(stats.assign, 81);
        assert_eq!(stats.pmu_paid, 9);
        assert_eq!(stats.device_at, 9);
        assert_eq!(stats.interrupted, 6);
        assert_eq!(stats.observable, 63);
        assert_eq!(stats.total_variables(), 339);
    }

    #[test]
    fn prohibited_bus_pins_its_rows() {
        let case = case::builtin("ieee9").unwrap();
        let network = &case.network;
        let of = |id: u32| network.bus_index(id).unwrap();
        let mut options = case.options.clone();
        options.prohibited.insert(of(6));
        let set =
            enumerate_states(network, &ContingencyConfig::default_for(network)).unwrap();
        let problem = build_model(network, &case.params, &options, &set).unwrap();
        for j in 0..9 {
            let m = &problem.variables[problem.var(VarKind::PmuObserve(of(6), j))];
            assert!(m.is_fixed() && m.upper == 0.0, "{}", m.name);
            let d = &problem.variables[problem.var(VarKind::Relay(of(6), j))];
            assert!(d.is_fixed() && d.upper == 0.0, "{}", d.name);
        }
    }

    #[test]
    fn existing_pmu_fixes_channels_and_cost_indicator() {
        let case = case::builtin("ieee9").unwrap();
        let network = &case.network;
        let of = |id: u32| network.bus_index(id).unwrap();
        let mut options = case.options.clone();
        options
            .existing_pmus
            .insert(of(7), [of(5), of(7), of(8)].into_iter().collect());
        let set =
            enumerate_states(network, &ContingencyConfig::default_for(network)).unwrap();
        let problem = build_model(network, &case.params, &options, &set).unwrap();
        for target in [5u32, 7, 8] {
            let v = &problem.variables[problem.var(VarKind::PmuObserve(of(7), of(target)))];
            assert!(v.is_fixed() && v.lower == 1.0, "{}", v.name);
        }
        let paid = &problem.variables[problem.var(VarKind::PmuPaid(of(7)))];
        assert!(paid.is_fixed() && paid.upper == 0.0);
        // The substation holding the pre-installed PMU carries no
        // interruption price.
        let k = network.substation_of(of(7));
        let uk = problem.var(VarKind::Interrupted(k));
        assert!(problem.cost.terms.iter().all(|&(v, _)| v != uk));
    }

    #[test]
    fn fully_prohibited_neighborhood_is_rejected_early() {
        let case = case::builtin("ieee9").unwrap();
        let network = &case.network;
        let of = |id: u32| network.bus_index(id).unwrap();
        let mut options = case.options.clone();
        // Bus 1 observes only via its own PMU; prohibiting it strands the bus.
        options.prohibited.insert(of(1));
        let set =
            enumerate_states(network, &ContingencyConfig::default_for(network)).unwrap();
        let err = build_model(network, &case.params, &options, &set).unwrap_err();
        match err {
            ModelError::Unsatisfiable { bus, .. } => assert_eq!(bus, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn objective_expressions_match_evaluator_on_reference_plans() {
        let (case, set, problem) = nine_model();
        let network = &case.network;
        let q = network.hop_distances().unwrap();
        for k in 1..=7 {
            let plan = fixtures::table2_plan(network, k);
            let assignment = assignment_from_plan(&problem, &plan, network, &case.options, &set);
            let vector = crate::objectives::evaluate(
                &plan,
                network,
                &case.params,
                &case.options,
                &set,
                &q,
            )
            .unwrap();
            let cost = problem.cost.value(&assignment);
            assert_eq!(cost, vector.cost.cents() as f64, "cost, solution {k}");
            let unrel = problem.unreliability.value(&assignment);
            assert!(
                (unrel - vector.unreliability).abs() <= 1e-9,
                "unreliability, solution {k}: {unrel} vs {}",
                vector.unreliability
            );
            let traffic = problem.traffic.value(&assignment);
            assert!(
                (traffic - vector.traffic).abs() <= 1e-6 * vector.traffic.max(1.0),
                "traffic, solution {k}"
            );
        }
    }

    #[test]
    fn reference_assignments_satisfy_all_rows() {
        let (case, set, problem) = nine_model();
        for k in 1..=7 {
            let plan = fixtures::table2_plan(&case.network, k);
            let assignment =
                assignment_from_plan(&problem, &plan, &case.network, &case.options, &set);
            assert_eq!(problem.first_violation(&assignment, 1e-9), None, "solution {k}");
            let extracted =
                extract_plan(&problem, &assignment, &case.network, &case.params, &case.options)
                    .unwrap();
            assert_eq!(extracted, plan);
        }
    }

    #[test]
    fn bad_assignments_are_rejected_with_row_names() {
        let (case, set, problem) = nine_model();
        // All zeros: breaks base observability.
        let zeros = vec![0.0; problem.variables.len()];
        match extract_plan(&problem, &zeros, &case.network, &case.params, &case.options) {
            Err(ExtractError::ConstraintViolated { name }) => {
                assert!(name.starts_with("red_"), "{name}");
            }
            other => panic!("unexpected {other:?}"),
        }

        // Routing to a bus with no concentrator.
        let plan = fixtures::table2_plan(&case.network, 1);
        let mut assignment =
            assignment_from_plan(&problem, &plan, &case.network, &case.options, &set);
        let of = |id: u32| case.network.bus_index(id).unwrap();
        assignment[problem.var(VarKind::Pdc(of(9)))] = 0.0;
        match extract_plan(&problem, &assignment, &case.network, &case.params, &case.options) {
            Err(ExtractError::ConstraintViolated { name }) => {
                assert!(name.starts_with("route_pdc_"), "{name}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lp_export_is_deterministic_and_well_formed() {
        let (_, _, problem) = nine_model();
        let scalarized = problem.scalarized("cost", &[(ObjectiveKind::Cost, 1.0)]);
        let mut a = Vec::new();
        export_lp(&scalarized, &mut a).unwrap();
        let mut b = Vec::new();
        export_lp(&scalarized, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("\\ wams planning model: cost\nMinimize\n obj:"));
        assert!(text.contains("Subject To"));
        assert!(text.contains("Binaries"));
        assert!(text.trim_end().ends_with("End"));
        // Fixed variables appear in the bounds section.
        assert!(text.contains(" m_1_5 = 0"));
    }

    /// Builds a full variable assignment from a plan, deriving indicator
    /// and observability variables the way a feasible solve would.
    pub(crate) fn assignment_from_plan(
        problem: &MilpProblem,
        plan: &PlacementPlan,
        network: &PowerNetwork,
        options: &PlanningOptions,
        set: &ContingencySet,
    ) -> Vec<f64> {
        let derived = plan.derived(network, options);
        let observability: Vec<_> = set
            .states
            .iter()
            .map(|state| crate::contingency::observability(plan, state))
            .collect();
        problem
            .variables
            .iter()
            .map(|var| {
                let on = match var.kind {
                    VarKind::PmuObserve(i, j) => plan.pmu_observe(i, j),
                    VarKind::Relay(i, j) => plan.relay(i, j),
                    VarKind::Pdc(i) => plan.pdc(i),
                    VarKind::Assign(i, j) => plan.assignment(i, j),
                    VarKind::PmuPaid(i) => derived.pmu_paid[i],
                    VarKind::DeviceAt(i) => derived.device_at[i],
                    VarKind::Interrupted(k) => derived.interrupted[k] || var.lower == 1.0,
                    VarKind::Observable(i, s) => observability[s].get(i),
                };
                if on {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }
}
