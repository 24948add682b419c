//! Exact 0-1 solving by best-first branch-and-bound over the simplex
//! relaxation, plus hand-off to external solvers through the LP text
//! format with full re-verification of anything they return.

use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::milp::MilpProblem;
use crate::simplex::{ColMatrix, LpError, LpSolution, LpStatus, LpWorkspace};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("problem has no scalarized objective; select one before solving")]
    NoObjective,
    #[error("linear relaxation failed: {0}")]
    Lp(#[from] LpError),
    #[error("rounded relaxation solution violates {name}; numerical trouble")]
    Numerical { name: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// Node or time cap hit; the result carries the best incumbent found
    /// and the proven lower bound.
    CapExceeded,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Binary assignment of every model variable (empty when infeasible).
    pub assignment: Vec<f64>,
    /// Objective value of the incumbent, constant term included.
    pub objective: f64,
    /// Proven lower bound on the optimum, constant term included.
    pub bound: f64,
    pub node_count: u64,
    pub wall: Duration,
}

impl SolveResult {
    pub fn gap(&self) -> f64 {
        (self.objective - self.bound).max(0.0)
    }
}

/// Node and wall-clock caps for one solve.
#[derive(Clone, Copy, Debug)]
pub struct SolveLimits {
    pub max_nodes: u64,
    pub time_limit: Option<Duration>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_nodes: 1_000_000,
            time_limit: Some(Duration::from_secs(600)),
        }
    }
}

#[derive(Clone, Debug)]
pub enum LpRelaxOutcome {
    Optimal {
        /// Relaxation optimum, constant term included; a valid lower bound
        /// on the integer optimum.
        objective: f64,
        values: Vec<f64>,
    },
    Infeasible,
}

/// Solves the continuous relaxation over the 0-1 box.
pub fn lp_relax(problem: &MilpProblem) -> Result<LpRelaxOutcome, SolveError> {
    let prepared = Prepared::new(problem)?;
    let solution = prepared.solve_lp(&prepared.root_lower, &prepared.root_upper)?;
    Ok(match solution.status {
        LpStatus::Optimal => LpRelaxOutcome::Optimal {
            objective: solution.objective + prepared.constant,
            values: solution.values,
        },
        LpStatus::Infeasible => LpRelaxOutcome::Infeasible,
    })
}

/// Exact minimization of a scalarized problem by branch-and-bound:
/// best-first node order, branching on the most fractional variable with
/// lowest-index tie-break, bounds from the simplex relaxation. Identical
/// inputs and limits explore identical trees.
pub fn solve(problem: &MilpProblem, limits: &SolveLimits) -> Result<SolveResult, SolveError> {
    solve_with_incumbent(problem, limits, None)
}

/// As [`solve`], seeded with a known-feasible assignment (used when a
/// neighboring scalarization already produced a plan that remains feasible
/// here). An infeasible or worthless seed is ignored.
pub fn solve_with_incumbent(
    problem: &MilpProblem,
    limits: &SolveLimits,
    seed: Option<&[f64]>,
) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let prepared = Prepared::new(problem)?;

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(seed) = seed {
        if seed.len() == problem.variables.len()
            && problem.first_violation(seed, 1e-6).is_none()
        {
            let value = prepared.exact_objective(seed);
            incumbent = Some((value, seed.to_vec()));
        }
    }

    let mut heap: BinaryHeap<NodeOrder> = BinaryHeap::new();
    let mut next_id: u64 = 0;
    heap.push(NodeOrder {
        bound: f64::NEG_INFINITY,
        id: next_id,
        node: None,
    });
    next_id += 1;

    let mut node_count: u64 = 0;
    let mut best_unexplored_bound = f64::NEG_INFINITY;
    let mut capped = false;

    let mut lower = prepared.root_lower.clone();
    let mut upper = prepared.root_upper.clone();

    while let Some(entry) = heap.pop() {
        // All remaining nodes are at least as bad as this one.
        best_unexplored_bound = entry.bound;
        if let Some((best, _)) = &incumbent {
            if !prepared.can_improve(entry.bound, *best) {
                // Best-first order: nothing left can beat the incumbent.
                best_unexplored_bound = entry.bound;
                heap.clear();
                break;
            }
        }
        if node_count >= limits.max_nodes {
            capped = true;
            break;
        }
        if let Some(limit) = limits.time_limit {
            if start.elapsed() > limit {
                capped = true;
                break;
            }
        }
        node_count += 1;

        // Materialize the node's bound fixings.
        lower.copy_from_slice(&prepared.root_lower);
        upper.copy_from_slice(&prepared.root_upper);
        let mut walk = entry.node.as_ref();
        while let Some(n) = walk {
            if n.value {
                lower[n.var] = 1.0;
                upper[n.var] = 1.0;
            } else {
                lower[n.var] = 0.0;
                upper[n.var] = 0.0;
            }
            walk = n.parent.as_ref();
        }

        let relaxation = prepared.solve_lp(&lower, &upper)?;
        if relaxation.status == LpStatus::Infeasible {
            continue;
        }
        let node_bound = prepared.safe_bound(relaxation.objective);
        if let Some((best, _)) = &incumbent {
            if !prepared.can_improve(node_bound, *best) {
                continue;
            }
        }

        match most_fractional(&relaxation.values) {
            None => {
                // Integral relaxation: candidate incumbent.
                let rounded: Vec<f64> =
                    relaxation.values.iter().map(|x| x.round()).collect();
                if let Some(name) = problem.first_violation(&rounded, 1e-6) {
                    return Err(SolveError::Numerical { name });
                }
                let value = prepared.exact_objective(&rounded);
                let better = match &incumbent {
                    None => true,
                    Some((best, _)) => value < *best,
                };
                if better {
                    incumbent = Some((value, rounded));
                }
            }
            Some(var) => {
                for value in [false, true] {
                    heap.push(NodeOrder {
                        bound: node_bound,
                        id: next_id,
                        node: Some(Rc::new(NodeData {
                            parent: entry.node.clone(),
                            var,
                            value,
                        })),
                    });
                    next_id += 1;
                }
            }
        }
    }

    let wall = start.elapsed();
    let bound_terms = if capped {
        let mut best = best_unexplored_bound;
        for entry in heap.iter() {
            best = best.min(entry.bound);
        }
        best
    } else {
        match &incumbent {
            Some((value, _)) => *value,
            None => f64::INFINITY,
        }
    };

    Ok(match incumbent {
        Some((value, assignment)) => SolveResult {
            status: if capped {
                SolveStatus::CapExceeded
            } else {
                SolveStatus::Optimal
            },
            assignment,
            objective: value + prepared.constant,
            bound: bound_terms + prepared.constant,
            node_count,
            wall,
        },
        None => SolveResult {
            status: if capped {
                SolveStatus::CapExceeded
            } else {
                SolveStatus::Infeasible
            },
            assignment: Vec::new(),
            objective: f64::INFINITY,
            bound: bound_terms + prepared.constant,
            node_count,
            wall,
        },
    })
}

/// Most fractional variable: maximal distance from the nearest integer,
/// lowest index breaking ties. `None` when everything is integral.
fn most_fractional(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, &x) in values.iter().enumerate() {
        let frac = (x - x.round()).abs();
        if frac <= 1e-6 {
            continue;
        }
        let score = x.fract().abs().min(1.0 - x.fract().abs());
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((idx, score)),
        }
    }
    best.map(|(idx, _)| idx)
}

struct NodeData {
    parent: Option<Rc<NodeData>>,
    var: usize,
    value: bool,
}

struct NodeOrder {
    bound: f64,
    id: u64,
    node: Option<Rc<NodeData>>,
}

impl PartialEq for NodeOrder {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for NodeOrder {}
impl PartialOrd for NodeOrder {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for NodeOrder {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap; reverse for best-first (lowest bound
        // wins). Equal bounds pop newest-first, so plateaus are explored
        // depth-first and integral incumbents appear early.
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| self.id.cmp(&other.id))
    }
}

/// Problem data prepared for repeated relaxation solves.
struct Prepared {
    workspace: LpWorkspace,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    constant: f64,
    /// All objective coefficients are integers: bounds can be rounded up
    /// and incumbent values compared exactly.
    integral: bool,
    coefficients: Vec<(usize, f64)>,
}

impl Prepared {
    fn new(problem: &MilpProblem) -> Result<Prepared, SolveError> {
        let objective = problem.objective.as_ref().ok_or(SolveError::NoObjective)?;
        let n = problem.variables.len();
        let m = problem.constraints.len();
        let mut triples = Vec::new();
        let mut rhs = Vec::with_capacity(m);
        let mut slack_lower = Vec::with_capacity(m);
        let mut slack_upper = Vec::with_capacity(m);
        for (r, con) in problem.constraints.iter().enumerate() {
            for &(v, c) in &con.terms {
                triples.push((r, v, c));
            }
            rhs.push(con.rhs);
            match con.cmp {
                crate::milp::Cmp::Le => {
                    slack_lower.push(0.0);
                    slack_upper.push(f64::INFINITY);
                }
                crate::milp::Cmp::Ge => {
                    slack_lower.push(f64::NEG_INFINITY);
                    slack_upper.push(0.0);
                }
                crate::milp::Cmp::Eq => {
                    slack_lower.push(0.0);
                    slack_upper.push(0.0);
                }
            }
        }
        let mut dense_objective = vec![0.0f64; n];
        for &(v, c) in &objective.expr.terms {
            dense_objective[v] += c;
        }
        let integral = objective.expr.terms.iter().all(|&(_, c)| c.fract() == 0.0);
        Ok(Prepared {
            workspace: LpWorkspace {
                structural: ColMatrix::from_triples(m, n, &triples),
                objective: dense_objective,
                rhs,
                slack_lower,
                slack_upper,
            },
            root_lower: problem.variables.iter().map(|v| v.lower).collect(),
            root_upper: problem.variables.iter().map(|v| v.upper).collect(),
            constant: objective.expr.constant,
            integral,
            coefficients: objective.expr.terms.clone(),
        })
    }

    fn solve_lp(&self, lower: &[f64], upper: &[f64]) -> Result<LpSolution, LpError> {
        self.workspace.solve(lower, upper)
    }

    /// Objective terms evaluated on a binary assignment; exact integer
    /// summation when every coefficient is integral.
    fn exact_objective(&self, assignment: &[f64]) -> f64 {
        if self.integral {
            let mut acc: i128 = 0;
            for &(v, c) in &self.coefficients {
                if assignment[v] > 0.5 {
                    acc += c as i128;
                }
            }
            acc as f64
        } else {
            let mut acc = 0.0;
            for &(v, c) in &self.coefficients {
                if assignment[v] > 0.5 {
                    acc += c;
                }
            }
            acc
        }
    }

    /// Converts a relaxation value into a safe lower bound.
    fn safe_bound(&self, lp_value: f64) -> f64 {
        if self.integral {
            (lp_value - 1e-6).ceil()
        } else {
            lp_value - 1e-9 * (1.0 + lp_value.abs())
        }
    }

    /// Can a node with this bound still beat the incumbent?
    fn can_improve(&self, bound: f64, incumbent: f64) -> bool {
        if self.integral {
            bound < incumbent - 0.5
        } else {
            bound < incumbent - 1e-9 * (1.0 + incumbent.abs())
        }
    }
}
