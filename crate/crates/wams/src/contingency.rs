//! Line-outage system states, their probabilities, and plan observability
//! and unreliability evaluation over an enumerated state set.

use thiserror::Error;

use crate::network::PowerNetwork;
use crate::plan::PlacementPlan;

#[derive(Debug, Error)]
pub enum ContingencyError {
    #[error("contingency enumeration would produce {would} states, cap is {cap}")]
    TooManyStates { would: u128, cap: usize },
    #[error("invalid contingency configuration: {what}")]
    BadConfig { what: String },
}

/// Which branches may fail and up to how many simultaneous outages to
/// enumerate. The base (no-outage) state is always included.
#[derive(Clone, Debug)]
pub struct ContingencyConfig {
    /// Branch indices (canonical order) eligible for outage.
    pub failable: Vec<usize>,
    pub max_order: usize,
    pub state_cap: usize,
}

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

impl ContingencyConfig {
    /// Default policy: single outages over the non-transformer lines.
    pub fn default_for(network: &PowerNetwork) -> ContingencyConfig {
        ContingencyConfig::non_transformer(network, 1)
    }

    pub fn non_transformer(network: &PowerNetwork, max_order: usize) -> ContingencyConfig {
        let failable = network
            .branches()
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.transformer)
            .map(|(idx, _)| idx)
            .collect();
        ContingencyConfig {
            failable,
            max_order,
            state_cap: DEFAULT_STATE_CAP,
        }
    }

    pub fn all_branches(network: &PowerNetwork, max_order: usize) -> ContingencyConfig {
        ContingencyConfig {
            failable: (0..network.branches().len()).collect(),
            max_order,
            state_cap: DEFAULT_STATE_CAP,
        }
    }

    pub fn explicit(
        network: &PowerNetwork,
        branches: Vec<usize>,
        max_order: usize,
    ) -> Result<ContingencyConfig, ContingencyError> {
        for &idx in &branches {
            if idx >= network.branches().len() {
                return Err(ContingencyError::BadConfig {
                    what: format!("branch index {idx} out of range"),
                });
            }
        }
        let mut failable = branches;
        failable.sort_unstable();
        failable.dedup();
        Ok(ContingencyConfig {
            failable,
            max_order,
            state_cap: DEFAULT_STATE_CAP,
        })
    }
}

/// One system state: the set of failed branches, its occurrence
/// probability, and the surviving bus connectivity as bit rows (the i-th
/// row has bit j set when j = i or branch (i,j) is alive).
#[derive(Clone, Debug)]
pub struct SystemState {
    pub outages: Vec<usize>,
    pub probability: f64,
    rows: Vec<u64>,
    words_per_row: usize,
}

impl SystemState {
    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] & (1u64 << (j % 64)) != 0
    }
}

/// Deterministically ordered enumeration of system states.
#[derive(Clone, Debug)]
pub struct ContingencySet {
    pub states: Vec<SystemState>,
    n: usize,
}

impl ContingencySet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn bus_count(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> &SystemState {
        &self.states[0]
    }

    pub fn total_probability(&self) -> f64 {
        self.states.iter().map(|s| s.probability).sum()
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Enumerates the base state plus every outage combination of size
/// 1..=max_order over the failable branches, in lexicographic order of the
/// outage sets. Probabilities multiply branch reliabilities in canonical
/// branch order, restricted to the failable set.
pub fn enumerate_states(
    network: &PowerNetwork,
    config: &ContingencyConfig,
) -> Result<ContingencySet, ContingencyError> {
    let branches = network.branches();
    for &idx in &config.failable {
        if idx >= branches.len() {
            return Err(ContingencyError::BadConfig {
                what: format!("branch index {idx} out of range"),
            });
        }
    }
    if config.max_order > config.failable.len() {
        return Err(ContingencyError::BadConfig {
            what: format!(
                "max_order {} exceeds {} failable branches",
                config.max_order,
                config.failable.len()
            ),
        });
    }
    let mut failable = config.failable.clone();
    failable.sort_unstable();
    failable.dedup();

    let total: u128 = (0..=config.max_order)
        .map(|k| binomial(failable.len(), k))
        .sum();
    if total > config.state_cap as u128 {
        return Err(ContingencyError::TooManyStates {
            would: total,
            cap: config.state_cap,
        });
    }

    let n = network.bus_count();
    let words_per_row = n.div_ceil(64);
    let mut base_rows = vec![0u64; n * words_per_row];
    let set_bit = |rows: &mut Vec<u64>, i: usize, j: usize| {
        rows[i * words_per_row + j / 64] |= 1u64 << (j % 64);
    };
    for i in 0..n {
        set_bit(&mut base_rows, i, i);
    }
    for br in branches {
        set_bit(&mut base_rows, br.a, br.b);
        set_bit(&mut base_rows, br.b, br.a);
    }

    let make_state = |outages: &[usize]| -> SystemState {
        let mut probability = 1.0f64;
        for &idx in &failable {
            let p = branches[idx].reliability;
            if outages.binary_search(&idx).is_ok() {
                probability *= 1.0 - p;
            } else {
                probability *= p;
            }
        }
        let mut rows = base_rows.clone();
        for &idx in outages {
            let br = &branches[idx];
            rows[br.a * words_per_row + br.b / 64] &= !(1u64 << (br.b % 64));
            rows[br.b * words_per_row + br.a / 64] &= !(1u64 << (br.a % 64));
        }
        SystemState {
            outages: outages.to_vec(),
            probability,
            rows,
            words_per_row,
        }
    };

    // Lexicographic subset enumeration; the empty set (base state) first.
    let mut states = Vec::with_capacity(total as usize);
    let mut current: Vec<usize> = Vec::new();
    fn recurse(
        start: usize,
        failable: &[usize],
        max_order: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<SystemState>,
        make: &dyn Fn(&[usize]) -> SystemState,
    ) {
        out.push(make(current));
        if current.len() == max_order {
            return;
        }
        for pos in start..failable.len() {
            current.push(failable[pos]);
            recurse(pos + 1, failable, max_order, current, out, make);
            current.pop();
        }
    }
    recurse(
        0,
        &failable,
        config.max_order,
        &mut current,
        &mut states,
        &make_state,
    );

    Ok(ContingencySet { states, n })
}

/// Per-bus observability bits of one state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservabilityVector {
    n: usize,
    bits: Vec<u64>,
}

impl ObservabilityVector {
    pub fn get(&self, i: usize) -> bool {
        self.bits[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn observable_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn all_observable(&self) -> bool {
        self.observable_count() == self.n
    }
}

/// Observer masks derived from a plan, reusable across states: bus i is
/// observable in state s when some installed device can still reach it.
struct ObserverMasks {
    words_per_row: usize,
    /// Row i: buses whose device (PMU channel or relay far end) targets i.
    observers: Vec<u64>,
    /// Bus hosts a relay, whose own-end voltage measurement never depends
    /// on line state.
    self_covered: Vec<bool>,
}

impl ObserverMasks {
    fn build(plan: &PlacementPlan) -> ObserverMasks {
        let n = plan.size();
        let words_per_row = n.div_ceil(64);
        let mut observers = vec![0u64; n * words_per_row];
        let mut self_covered = vec![false; n];
        for i in 0..n {
            for j in 0..n {
                if plan.pmu_observe(j, i) || plan.relay(j, i) {
                    observers[i * words_per_row + j / 64] |= 1u64 << (j % 64);
                }
                if plan.relay(i, j) {
                    self_covered[i] = true;
                }
            }
        }
        ObserverMasks {
            words_per_row,
            observers,
            self_covered,
        }
    }

    fn evaluate(&self, n: usize, state: &SystemState) -> ObservabilityVector {
        let mut bits = vec![0u64; n.div_ceil(64)];
        for i in 0..n {
            let visible = self.self_covered[i]
                || self.observers[i * self.words_per_row..(i + 1) * self.words_per_row]
                    .iter()
                    .zip(state.row(i))
                    .any(|(obs, alive)| obs & alive != 0);
            if visible {
                bits[i / 64] |= 1u64 << (i % 64);
            }
        }
        ObservabilityVector { n, bits }
    }
}

/// Evaluates which buses a plan keeps observable in one system state.
pub fn observability(plan: &PlacementPlan, state: &SystemState) -> ObservabilityVector {
    ObserverMasks::build(plan).evaluate(plan.size(), state)
}

/// Per-bus and total unreliability of a plan over a state set.
#[derive(Clone, Debug)]
pub struct UnreliabilityReport {
    pub per_bus: Vec<f64>,
    pub total: f64,
}

/// Probability-weighted unobservability, summed per bus over all states in
/// enumeration order. States are evaluated concurrently when the
/// `parallel` feature is on; the reduction is an ordered sequential fold,
/// so results are bit-identical either way.
pub fn unreliability(plan: &PlacementPlan, set: &ContingencySet) -> UnreliabilityReport {
    let masks = ObserverMasks::build(plan);
    let n = set.bus_count();
    let evaluations = crate::par::map_slice(&set.states, |state| {
        (state.probability, masks.evaluate(n, state))
    });
    reduce_unreliability(n, &evaluations)
}

/// Sequential variant of [`unreliability`], kept callable for benchmarks.
pub fn unreliability_serial(plan: &PlacementPlan, set: &ContingencySet) -> UnreliabilityReport {
    let masks = ObserverMasks::build(plan);
    let n = set.bus_count();
    let evaluations: Vec<(f64, ObservabilityVector)> = set
        .states
        .iter()
        .map(|state| (state.probability, masks.evaluate(n, state)))
        .collect();
    reduce_unreliability(n, &evaluations)
}

fn reduce_unreliability(
    n: usize,
    evaluations: &[(f64, ObservabilityVector)],
) -> UnreliabilityReport {
    let mut per_bus = vec![0.0f64; n];
    for (probability, obs) in evaluations {
        for (i, acc) in per_bus.iter_mut().enumerate() {
            if !obs.get(i) {
                *acc += probability;
            }
        }
    }
    let total = per_bus.iter().sum();
    UnreliabilityReport { per_bus, total }
}
