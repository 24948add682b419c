//! Reference plans for the nine-bus case used across unit tests.

use crate::network::PowerNetwork;
use crate::plan::PlacementPlan;

struct PlanSpec {
    pmus: &'static [(u32, &'static [u32], u32)],
    dulrs: &'static [(u32, u32, u32)],
    pdcs: &'static [u32],
}

const TABLE2: [PlanSpec; 7] = [
    PlanSpec {
        pmus: &[(1, &[1], 9), (2, &[2], 9), (3, &[3], 9)],
        dulrs: &[(4, 6, 9), (7, 5, 9), (9, 8, 9)],
        pdcs: &[9],
    },
    PlanSpec {
        pmus: &[
            (1, &[1], 9),
            (2, &[2], 9),
            (3, &[3], 9),
            (7, &[5, 7, 8], 9),
            (9, &[6, 8, 9], 9),
        ],
        dulrs: &[(4, 6, 9)],
        pdcs: &[9],
    },
    PlanSpec {
        pmus: &[(1, &[1], 1), (2, &[2], 2), (3, &[3], 3)],
        dulrs: &[(4, 6, 1), (7, 5, 2), (9, 8, 3)],
        pdcs: &[1, 2, 3],
    },
    PlanSpec {
        pmus: &[
            (1, &[1], 2),
            (2, &[2], 2),
            (3, &[3], 2),
            (9, &[6, 8, 9], 2),
        ],
        dulrs: &[(4, 6, 2), (5, 7, 2), (7, 8, 2)],
        pdcs: &[2],
    },
    PlanSpec {
        pmus: &[
            (1, &[1], 1),
            (2, &[2], 2),
            (3, &[3], 3),
            (6, &[4, 6, 9], 6),
            (7, &[5, 7, 8], 2),
        ],
        dulrs: &[],
        pdcs: &[1, 2, 3, 6],
    },
    PlanSpec {
        pmus: &[
            (1, &[1], 4),
            (2, &[2], 7),
            (3, &[3], 9),
            (9, &[6, 8, 9], 9),
        ],
        dulrs: &[(4, 6, 4), (5, 4, 5), (7, 8, 7)],
        pdcs: &[4, 5, 7, 9],
    },
    PlanSpec {
        pmus: &[
            (1, &[1], 4),
            (2, &[2], 7),
            (3, &[3], 9),
            (6, &[4, 6, 9], 6),
        ],
        dulrs: &[(7, 5, 7), (8, 9, 8)],
        pdcs: &[4, 6, 7, 8, 9],
    },
];

fn build(network: &PowerNetwork, spec: &PlanSpec) -> PlacementPlan {
    let of = |id: u32| network.bus_index(id).unwrap();
    let mut plan = PlacementPlan::empty(network.bus_count());
    for &(bus, observes, pdc) in spec.pmus {
        let i = of(bus);
        plan.set_pmu_observe(i, i, true);
        for &target in observes {
            if target != bus {
                plan.set_pmu_observe(i, of(target), true);
            }
        }
        plan.set_assignment(i, of(pdc), true);
    }
    for &(bus, toward, pdc) in spec.dulrs {
        let i = of(bus);
        plan.set_relay(i, of(toward), true);
        plan.set_assignment(i, of(pdc), true);
    }
    for &pdc in spec.pdcs {
        plan.set_pdc(of(pdc), true);
    }
    plan
}

/// The k-th (1-based) reference solution of the nine-bus frontier.
pub fn table2_plan(network: &PowerNetwork, k: usize) -> PlacementPlan {
    build(network, &TABLE2[k - 1])
}

/// Construction costs of the reference solutions, in cents.
pub const TABLE2_COST_CENTS: [i64; 7] = [
    16_964_899, 17_699_417, 18_514_899, 21_846_845, 23_509_730, 24_171_845, 28_432_158,
];
