//! Planning toolkit for wide-area measurement system construction: joint
//! PMU / line-relay / data-concentrator placement as a multi-objective 0-1
//! integer linear program, with exact branch-and-bound solving, epsilon and
//! weighted-sum Pareto scans, and solver-independent re-evaluation of every
//! plan's cost, unreliability and data-traffic objectives.

pub mod case;
pub mod cli;
pub mod contingency;
pub mod external;
pub mod network;
pub mod milp;
pub mod objectives;
pub mod oracle;
pub mod par;
pub mod pareto;
pub mod plan;
pub mod simplex;
pub mod solver;

#[cfg(test)]
pub(crate) mod fixtures;

pub use case::{builtin, load_case, Case};
pub use network::{CaseParameters, DistanceMatrix, Money, PowerNetwork};
pub use plan::{PlacementPlan, PlanningOptions};
