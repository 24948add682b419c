//! Power network model: buses, branches, substations, communication hop
//! distances and the per-case cost/communication parameters.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Monetary amount stored as integer cents so cost sums are exact and
/// reproducible across runs and platforms.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn from_cents(cents: i64) -> Money {
        Money(cents)
    }

    /// Parses a dollar amount; rejects values that are not cent-precise.
    pub fn from_dollars(dollars: f64) -> Result<Money, CaseError> {
        let cents = dollars * 100.0;
        let rounded = cents.round();
        if !cents.is_finite() || (cents - rounded).abs() > 1e-4 {
            return Err(CaseError::BadParameter {
                what: format!("money value {dollars} is not cent-precise"),
            });
        }
        Ok(Money(rounded as i64))
    }

    pub fn cents(self) -> i64 {
        self.0
    }

    pub fn dollars(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl std::ops::Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl std::iter::Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}${}.{:02}", abs / 100, abs % 100)
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A branch between two buses, stored with endpoint indices `a < b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    pub a: usize,
    pub b: usize,
    pub transformer: bool,
    pub reliability: f64,
}

impl Branch {
    pub fn endpoints(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn other(&self, end: usize) -> usize {
        if end == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Errors raised while loading or validating a case.
#[derive(Debug, Error)]
pub enum CaseError {
    #[error("case file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown bus {bus} referenced by {context}")]
    UnknownBus { bus: u32, context: String },
    #[error("duplicate bus id {bus}")]
    DuplicateBus { bus: u32 },
    #[error("branch ({a},{b}) declared more than once")]
    DuplicateBranch { a: u32, b: u32 },
    #[error("branch ({bus},{bus}) is a self-loop")]
    SelfLoop { bus: u32 },
    #[error("power graph is disconnected: bus {bus} unreachable from bus {root}")]
    Disconnected { bus: u32, root: u32 },
    #[error("communication topology is disconnected: bus {bus} unreachable")]
    DisconnectedCi { bus: u32 },
    #[error("substation groups do not partition the bus set: {what}")]
    BadPartition { what: String },
    #[error("invalid parameter: {what}")]
    BadParameter { what: String },
    #[error("invalid options: {what}")]
    BadOptions { what: String },
    #[error("case has no buses")]
    Empty,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Immutable power-network topology with its substation partition.
///
/// Buses are referenced externally by their declared ids and internally by
/// dense indices in declaration order. Branches are kept in a canonical
/// order (sorted by endpoint indices) which defines the branch-id ordering
/// used everywhere probabilities are multiplied or states enumerated.
#[derive(Clone, Debug)]
pub struct PowerNetwork {
    bus_ids: Vec<u32>,
    index_of: BTreeMap<u32, usize>,
    branches: Vec<Branch>,
    adjacency: Vec<Vec<usize>>,
    observable_adjacency: Vec<Vec<usize>>,
    substations: Vec<Vec<usize>>,
    substation_of: Vec<usize>,
    controller: usize,
    ci_edges: Option<Vec<(usize, usize)>>,
}

impl PowerNetwork {
    /// Builds and validates a network from raw parts. Bus ids are arbitrary;
    /// branch endpoints and the controller must reference declared buses,
    /// and the graph must be connected.
    pub fn new(
        bus_ids: Vec<u32>,
        raw_branches: Vec<(u32, u32, bool, f64)>,
        explicit_substations: Option<Vec<Vec<u32>>>,
        controller_bus: u32,
        ci_topology: Option<Vec<(u32, u32)>>,
    ) -> Result<PowerNetwork, CaseError> {
        if bus_ids.is_empty() {
            return Err(CaseError::Empty);
        }
        let mut index_of = BTreeMap::new();
        for (idx, &id) in bus_ids.iter().enumerate() {
            if index_of.insert(id, idx).is_some() {
                return Err(CaseError::DuplicateBus { bus: id });
            }
        }
        let n = bus_ids.len();

        let lookup = |id: u32, context: &str| -> Result<usize, CaseError> {
            index_of.get(&id).copied().ok_or(CaseError::UnknownBus {
                bus: id,
                context: context.to_string(),
            })
        };

        let mut branches = Vec::with_capacity(raw_branches.len());
        let mut seen = BTreeSet::new();
        for (from, to, transformer, reliability) in &raw_branches {
            if from == to {
                return Err(CaseError::SelfLoop { bus: *from });
            }
            let i = lookup(*from, &format!("branch ({from},{to})"))?;
            let j = lookup(*to, &format!("branch ({from},{to})"))?;
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if !seen.insert((a, b)) {
                return Err(CaseError::DuplicateBranch {
                    a: *from.min(to),
                    b: *from.max(to),
                });
            }
            if !(*reliability > 0.0 && *reliability <= 1.0) {
                return Err(CaseError::BadParameter {
                    what: format!("branch ({from},{to}) reliability {reliability} outside (0,1]"),
                });
            }
            branches.push(Branch {
                a,
                b,
                transformer: *transformer,
                reliability: *reliability,
            });
        }
        branches.sort_by_key(|br| (br.a, br.b));

        let mut adjacency = vec![Vec::new(); n];
        let mut observable_adjacency = vec![Vec::new(); n];
        for br in &branches {
            adjacency[br.a].push(br.b);
            adjacency[br.b].push(br.a);
            if !br.transformer {
                observable_adjacency[br.a].push(br.b);
                observable_adjacency[br.b].push(br.a);
            }
        }
        for list in adjacency.iter_mut().chain(observable_adjacency.iter_mut()) {
            list.sort_unstable();
        }

        // Reject disconnected cases at load: an observable wide-area plan
        // over a disconnected system is not meaningful.
        let edges: Vec<(usize, usize)> = branches.iter().map(|b| (b.a, b.b)).collect();
        if let Some(unreached) = first_unreachable(n, &edges) {
            return Err(CaseError::Disconnected {
                bus: bus_ids[unreached],
                root: bus_ids[0],
            });
        }

        let substations = match explicit_substations {
            Some(groups) => {
                let mut resolved = Vec::with_capacity(groups.len());
                for group in &groups {
                    if group.is_empty() {
                        return Err(CaseError::BadPartition {
                            what: "empty substation group".to_string(),
                        });
                    }
                    let mut members = Vec::with_capacity(group.len());
                    for &id in group {
                        members.push(lookup(id, "substation group")?);
                    }
                    members.sort_unstable();
                    resolved.push(members);
                }
                validate_partition(n, &resolved, &bus_ids)?;
                resolved.sort_by_key(|g| g[0]);
                resolved
            }
            None => group_substations(n, &branches),
        };
        let mut substation_of = vec![usize::MAX; n];
        for (k, group) in substations.iter().enumerate() {
            for &i in group {
                substation_of[i] = k;
            }
        }

        let controller = lookup(controller_bus, "controller_bus")?;

        let ci_edges = match ci_topology {
            Some(raw) => {
                let mut edges = Vec::with_capacity(raw.len());
                for (from, to) in &raw {
                    if from == to {
                        return Err(CaseError::SelfLoop { bus: *from });
                    }
                    let i = lookup(*from, "ci_topology edge")?;
                    let j = lookup(*to, "ci_topology edge")?;
                    edges.push((i.min(j), i.max(j)));
                }
                edges.sort_unstable();
                edges.dedup();
                Some(edges)
            }
            None => None,
        };

        Ok(PowerNetwork {
            bus_ids,
            index_of,
            branches,
            adjacency,
            observable_adjacency,
            substations,
            substation_of,
            controller,
            ci_edges,
        })
    }

    pub fn bus_count(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn bus_id(&self, index: usize) -> u32 {
        self.bus_ids[index]
    }

    pub fn bus_ids(&self) -> &[u32] {
        &self.bus_ids
    }

    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.index_of.get(&id).copied()
    }

    /// Branches in canonical (branch-id) order.
    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch_index(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (i.min(j), i.max(j));
        self.branches.iter().position(|br| (br.a, br.b) == (a, b))
    }

    /// Full adjacency of bus `i`, transformer branches included.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Neighbors reachable over non-transformer branches. Measurement
    /// devices can only infer the far-side voltage across branches with a
    /// known model, so channel assignment and line relays are restricted
    /// to this subgraph while transformers still carry data and define
    /// substations.
    pub fn observable_neighbors(&self, i: usize) -> &[usize] {
        &self.observable_adjacency[i]
    }

    pub fn is_observable_branch(&self, i: usize, j: usize) -> bool {
        self.observable_adjacency[i].binary_search(&j).is_ok()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn substations(&self) -> &[Vec<usize>] {
        &self.substations
    }

    pub fn substation_count(&self) -> usize {
        self.substations.len()
    }

    pub fn substation_of(&self, i: usize) -> usize {
        self.substation_of[i]
    }

    pub fn controller(&self) -> usize {
        self.controller
    }

    /// Communication-infrastructure edges; defaults to the power topology
    /// when the case does not override it.
    pub fn ci_edges(&self) -> Vec<(usize, usize)> {
        match &self.ci_edges {
            Some(edges) => edges.clone(),
            None => self.branches.iter().map(|b| (b.a, b.b)).collect(),
        }
    }

    pub fn has_ci_override(&self) -> bool {
        self.ci_edges.is_some()
    }

    /// All-pairs hop-count matrix over the communication infrastructure.
    pub fn hop_distances(&self) -> Result<DistanceMatrix, CaseError> {
        hop_distances(self.bus_count(), &self.ci_edges(), &self.bus_ids)
    }

    pub fn hop_distances_serial(&self) -> Result<DistanceMatrix, CaseError> {
        hop_distances_serial(self.bus_count(), &self.ci_edges(), &self.bus_ids)
    }
}

fn validate_partition(
    n: usize,
    groups: &[Vec<usize>],
    bus_ids: &[u32],
) -> Result<(), CaseError> {
    let mut covered = vec![false; n];
    for group in groups {
        for &i in group {
            if covered[i] {
                return Err(CaseError::BadPartition {
                    what: format!("bus {} appears in more than one group", bus_ids[i]),
                });
            }
            covered[i] = true;
        }
    }
    if let Some(missing) = covered.iter().position(|c| !c) {
        return Err(CaseError::BadPartition {
            what: format!("bus {} belongs to no group", bus_ids[missing]),
        });
    }
    Ok(())
}

/// Groups buses into substations: connected components of the
/// transformer-only subgraph become multi-bus substations and every other
/// bus is a singleton. Groups are sorted by their smallest member, so the
/// result does not depend on branch declaration order.
pub fn group_substations(n: usize, branches: &[Branch]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for br in branches.iter().filter(|b| b.transformer) {
        let (ra, rb) = (find(&mut parent, br.a), find(&mut parent, br.b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

fn first_unreachable(n: usize, edges: &[(usize, usize)]) -> Option<usize> {
    if n == 0 {
        return None;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.iter().position(|s| !s)
}

/// Symmetric matrix of shortest-path hop counts.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    hops: Vec<u32>,
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.hops[i * self.n + j]
    }
}

fn bfs_row(n: usize, adj: &[Vec<usize>], source: usize) -> Result<Vec<u32>, usize> {
    let mut dist = vec![u32::MAX; n];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    match dist.iter().position(|&d| d == u32::MAX) {
        Some(unreached) => Err(unreached),
        None => Ok(dist),
    }
}

fn ci_adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

/// Breadth-first hop counts from every node; errors if the topology is
/// disconnected. Rows are independent, so they are computed in parallel
/// when the `parallel` feature is enabled.
pub fn hop_distances(
    n: usize,
    edges: &[(usize, usize)],
    bus_ids: &[u32],
) -> Result<DistanceMatrix, CaseError> {
    let adj = ci_adjacency(n, edges);
    let rows = crate::par::map_indexed(n, |source| bfs_row(n, &adj, source));
    collect_rows(n, rows, bus_ids)
}

/// Sequential variant of [`hop_distances`], kept callable for benchmarks.
pub fn hop_distances_serial(
    n: usize,
    edges: &[(usize, usize)],
    bus_ids: &[u32],
) -> Result<DistanceMatrix, CaseError> {
    let adj = ci_adjacency(n, edges);
    let rows = (0..n).map(|source| bfs_row(n, &adj, source)).collect();
    collect_rows(n, rows, bus_ids)
}

fn collect_rows(
    n: usize,
    rows: Vec<Result<Vec<u32>, usize>>,
    bus_ids: &[u32],
) -> Result<DistanceMatrix, CaseError> {
    let mut hops = Vec::with_capacity(n * n);
    for row in rows {
        match row {
            Ok(mut r) => hops.append(&mut r),
            Err(unreached) => {
                return Err(CaseError::DisconnectedCi {
                    bus: bus_ids.get(unreached).copied().unwrap_or(unreached as u32),
                })
            }
        }
    }
    Ok(DistanceMatrix { n, hops })
}

/// Case-wide cost and communication parameters, with optional per-element
/// overrides keyed by bus index, directed branch end or substation member.
#[derive(Clone, Debug)]
pub struct CaseParameters {
    pub cost_pmu: Money,
    pub cost_dulr: Money,
    pub cost_pdc: Money,
    pub cost_interrupt: Money,
    pub line_reliability_default: f64,
    pub compression_ratio: f64,
    pub message_rate: f64,
    pub channel_limit: u32,
    pub pmu_cost_overrides: BTreeMap<usize, Money>,
    pub dulr_cost_overrides: BTreeMap<(usize, usize), Money>,
    pub interrupt_cost_overrides: BTreeMap<usize, Money>,
}

impl CaseParameters {
    pub fn validate(&self) -> Result<(), CaseError> {
        let nonneg = [
            ("cost_pmu", self.cost_pmu),
            ("cost_dulr", self.cost_dulr),
            ("cost_pdc", self.cost_pdc),
            ("cost_interrupt", self.cost_interrupt),
        ];
        for (name, value) in nonneg {
            if value.cents() < 0 {
                return Err(CaseError::BadParameter {
                    what: format!("{name} is negative"),
                });
            }
        }
        if !(self.line_reliability_default > 0.0 && self.line_reliability_default <= 1.0) {
            return Err(CaseError::BadParameter {
                what: format!(
                    "line_reliability_default {} outside (0,1]",
                    self.line_reliability_default
                ),
            });
        }
        if !(self.compression_ratio > 0.0 && self.compression_ratio <= 1.0) {
            return Err(CaseError::BadParameter {
                what: format!("compression_ratio {} outside (0,1]", self.compression_ratio),
            });
        }
        if !(self.message_rate > 0.0) {
            return Err(CaseError::BadParameter {
                what: format!("message_rate {} must be positive", self.message_rate),
            });
        }
        Ok(())
    }

    pub fn pmu_cost(&self, bus: usize) -> Money {
        self.pmu_cost_overrides
            .get(&bus)
            .copied()
            .unwrap_or(self.cost_pmu)
    }

    /// Cost of a line relay installed at the `i` end of branch `(i,j)`.
    pub fn dulr_cost(&self, i: usize, j: usize) -> Money {
        self.dulr_cost_overrides
            .get(&(i, j))
            .copied()
            .unwrap_or(self.cost_dulr)
    }

    pub fn pdc_cost(&self, _bus: usize) -> Money {
        self.cost_pdc
    }

    /// Interruption cost of substation `k`; overrides are keyed by any
    /// member bus of the substation.
    pub fn interrupt_cost(&self, network: &PowerNetwork, k: usize) -> Money {
        for &member in &network.substations()[k] {
            if let Some(&m) = self.interrupt_cost_overrides.get(&member) {
                return m;
            }
        }
        self.cost_interrupt
    }
}
