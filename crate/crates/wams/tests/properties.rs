//! Property tests for model invariants: monotonicity of observability
//! under device addition, probability normalization, dominance filtering,
//! and determinism of repeated evaluation.

use proptest::prelude::*;

use wams::contingency::{enumerate_states, observability, unreliability, ContingencyConfig};
use wams::network::Money;
use wams::objectives::ObjectiveVector;
use wams::pareto::{non_dominated_filter, ParetoPoint};
use wams::plan::PlacementPlan;

fn nine() -> wams::case::Case {
    wams::case::builtin("ieee9").unwrap()
}

/// A random (not necessarily feasible) plan over the nine-bus case:
/// arbitrary PMU/channel/relay bits on measurable structure.
fn arbitrary_plan() -> impl Strategy<Value = PlacementPlan> {
    (any::<u64>(), any::<u64>()).prop_map(|(pmu_bits, relay_bits)| {
        let case = nine();
        let network = &case.network;
        let n = network.bus_count();
        let mut plan = PlacementPlan::empty(n);
        let mut bit = 0;
        for i in 0..n {
            if pmu_bits & (1 << (i % 64)) != 0 {
                plan.set_pmu_observe(i, i, true);
            }
            for &j in network.observable_neighbors(i) {
                bit += 1;
                if plan.pmu_at(i) && pmu_bits.rotate_left(bit) & 1 != 0 {
                    plan.set_pmu_observe(i, j, true);
                }
                if relay_bits.rotate_left(bit) & 1 != 0 {
                    plan.set_relay(i, j, true);
                }
            }
        }
        plan
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Adding any single device bit never reduces observability anywhere,
    /// and never increases total unreliability.
    #[test]
    fn observability_monotone_under_device_addition(
        plan in arbitrary_plan(),
        extra_bus in 0usize..9,
        extra_kind in 0usize..2,
        seed in any::<u64>(),
    ) {
        let case = nine();
        let network = &case.network;
        let config = ContingencyConfig::default_for(network);
        let states = enumerate_states(network, &config).unwrap();

        let mut bigger = plan.clone();
        let neighbors = network.observable_neighbors(extra_bus);
        match extra_kind {
            0 => {
                bigger.set_pmu_observe(extra_bus, extra_bus, true);
            }
            _ if !neighbors.is_empty() => {
                let j = neighbors[(seed as usize) % neighbors.len()];
                bigger.set_relay(extra_bus, j, true);
            }
            _ => {
                bigger.set_pmu_observe(extra_bus, extra_bus, true);
            }
        }

        for state in &states.states {
            let before = observability(&plan, state);
            let after = observability(&bigger, state);
            for i in 0..network.bus_count() {
                prop_assert!(after.get(i) >= before.get(i));
            }
        }
        let before = unreliability(&plan, &states).total;
        let after = unreliability(&bigger, &states).total;
        prop_assert!(after <= before + 1e-15);
    }

    /// Complete enumeration probabilities always sum to one.
    #[test]
    fn complete_enumeration_normalizes(subset_mask in 1u32..64) {
        let case = nine();
        let network = &case.network;
        let all: Vec<usize> = ContingencyConfig::non_transformer(network, 0).failable;
        let failable: Vec<usize> = all
            .iter()
            .enumerate()
            .filter(|(bit, _)| subset_mask & (1 << bit) != 0)
            .map(|(_, &idx)| idx)
            .collect();
        let config = ContingencyConfig {
            max_order: failable.len(),
            failable,
            state_cap: 1_000_000,
        };
        let states = enumerate_states(network, &config).unwrap();
        prop_assert!((states.total_probability() - 1.0).abs() < 1e-12);
    }

    /// A relay at a bus keeps that bus observable in every state.
    #[test]
    fn self_relay_state_independence(plan in arbitrary_plan()) {
        let case = nine();
        let network = &case.network;
        let config = ContingencyConfig::non_transformer(network, 2);
        let states = enumerate_states(network, &config).unwrap();
        for state in &states.states {
            let obs = observability(&plan, state);
            for i in 0..network.bus_count() {
                let has_relay = (0..network.bus_count()).any(|j| plan.relay(i, j));
                if has_relay {
                    prop_assert!(obs.get(i));
                }
            }
        }
    }

    /// The dominance filter never keeps a dominated point and never drops
    /// an undominated one.
    #[test]
    fn dominance_filter_is_exact(raw in proptest::collection::vec((0i64..6, 0i64..6, 0i64..6), 1..24)) {
        let points: Vec<ParetoPoint> = raw
            .iter()
            .map(|&(c, u, d)| ParetoPoint {
                plan: PlacementPlan::empty(1),
                objectives: ObjectiveVector {
                    cost: Money::from_cents(c),
                    unreliability: u as f64,
                    traffic: d as f64,
                },
                provenance: String::new(),
            })
            .collect();
        let kept = non_dominated_filter(points.clone());
        // No kept point dominated by any input point.
        for point in &kept {
            for other in &points {
                prop_assert!(!other.objectives.dominates(&point.objectives));
            }
        }
        // Every input point is represented: either kept (same objectives)
        // or dominated by a kept one.
        for point in &points {
            let covered = kept.iter().any(|k| {
                k.objectives == point.objectives || k.objectives.dominates(&point.objectives)
            });
            prop_assert!(covered);
        }
        // Sorted lexicographically.
        for pair in kept.windows(2) {
            let a = &pair[0].objectives;
            let b = &pair[1].objectives;
            prop_assert!(
                (a.cost, a.unreliability, a.traffic) <= (b.cost, b.unreliability, b.traffic)
            );
        }
    }

    /// Evaluation is pure: repeated runs produce bit-identical results.
    #[test]
    fn evaluation_is_deterministic(plan in arbitrary_plan()) {
        let case = nine();
        let network = &case.network;
        let config = ContingencyConfig::non_transformer(network, 2);
        let states = enumerate_states(network, &config).unwrap();
        let a = unreliability(&plan, &states);
        let b = unreliability(&plan, &states);
        prop_assert_eq!(a.total.to_bits(), b.total.to_bits());
        prop_assert_eq!(a.per_bus, b.per_bus);
    }
}

/// Removing a branch from the failable set never increases unreliability
/// at complete enumeration depth (checked deterministically over all
/// single-branch removals for two reference plans).
#[test]
fn removing_failable_branches_never_increases_unreliability() {
    let case = nine();
    let network = &case.network;
    let base: Vec<usize> = ContingencyConfig::non_transformer(network, 0).failable;

    let plans = [
        {
            // Min-cost reference plan.
            let of = |id: u32| network.bus_index(id).unwrap();
            let mut plan = PlacementPlan::empty(9);
            for bus in [1, 2, 3] {
                plan.set_pmu_observe(of(bus), of(bus), true);
            }
            plan.set_relay(of(4), of(6), true);
            plan.set_relay(of(7), of(5), true);
            plan.set_relay(of(9), of(8), true);
            plan
        },
        PlacementPlan::empty(9),
    ];

    for plan in &plans {
        let full_config = ContingencyConfig {
            failable: base.clone(),
            max_order: base.len(),
            state_cap: 1_000_000,
        };
        let full = unreliability(
            plan,
            &enumerate_states(network, &full_config).unwrap(),
        )
        .total;
        for drop in 0..base.len() {
            let reduced: Vec<usize> = base
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, &b)| b)
                .collect();
            let config = ContingencyConfig {
                max_order: reduced.len(),
                failable: reduced,
                state_cap: 1_000_000,
            };
            let smaller = unreliability(plan, &enumerate_states(network, &config).unwrap());
            assert!(
                smaller.total <= full + 1e-12,
                "dropping branch {drop}: {} vs {}",
                smaller.total,
                full
            );
        }
    }
}
