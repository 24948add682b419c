//! Pareto frontier generation: payoff-table scalarizations, the
//! epsilon-constraint scan (complete up to grid resolution, with exact
//! cell skipping and lexicographic tightening) and the bounded
//! weighted-sum scan, plus dominance filtering and artifact export.

use std::fmt::Write as _;

use thiserror::Error;

use crate::case::Case;
use crate::contingency::{enumerate_states, ContingencyError, ContingencySet};
use crate::external::{delegate, DelegateError, ExternalSolver};
use crate::milp::{build_model, extract_plan, ExtractError, MilpProblem, ModelError};
use crate::network::{CaseParameters, DistanceMatrix, PowerNetwork};
use crate::objectives::{evaluate, ObjectiveKind, ObjectiveVector, TrafficError};
use crate::plan::{PlacementPlan, PlanningOptions};
use crate::solver::{solve_with_incumbent, SolveLimits, SolveResult, SolveStatus};

/// Default number of epsilon grid subdivisions per constrained objective.
pub const DEFAULT_RESOLUTION: usize = 32;
/// Default weighted-sum grid density (weights summing to this total).
pub const DEFAULT_WEIGHT_GRID: usize = 4;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Contingency(#[from] ContingencyError),
    #[error(transparent)]
    Solve(#[from] crate::solver::SolveError),
    #[error(transparent)]
    Delegate(#[from] DelegateError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("case admits no feasible plan under the given options")]
    Infeasible,
    #[error("payoff solve for {objective} hit its caps with no incumbent; raise the limits")]
    PayoffCapped { objective: &'static str },
    #[error("scan needs a primary objective and at least one constrained objective")]
    TooFewObjectives,
    #[error("case error: {0}")]
    Case(#[from] crate::network::CaseError),
}

/// How scalarized problems get solved.
#[derive(Clone, Debug, Default)]
pub enum Backend {
    #[default]
    Embedded,
    External(ExternalSolver),
}

/// One frontier point with the scalarization that produced it.
#[derive(Clone, Debug)]
pub struct ParetoPoint {
    pub plan: PlacementPlan,
    pub objectives: ObjectiveVector,
    pub provenance: String,
}

/// Non-dominated plans in lexicographic objective order.
#[derive(Clone, Debug)]
pub struct ParetoFrontier {
    pub points: Vec<ParetoPoint>,
    /// False when any scalarized solve hit its caps, in which case points
    /// may be missing or sub-optimal.
    pub complete: bool,
    pub report: ScanReport,
}

/// Run description attached to every frontier, rendered into the run
/// report artifact.
#[derive(Clone, Debug, Default)]
pub struct ScanReport {
    pub method: String,
    pub resolution: usize,
    pub payoff: Vec<(String, ObjectiveVector)>,
    pub solves: usize,
    pub capped_solves: usize,
    pub points: usize,
    pub notes: Vec<String>,
}

impl ScanReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method: {}", self.method);
        let _ = writeln!(out, "resolution: {}", self.resolution);
        let _ = writeln!(out, "scalarized solves: {}", self.solves);
        let _ = writeln!(out, "capped solves: {}", self.capped_solves);
        let _ = writeln!(out, "non-dominated points: {}", self.points);
        let _ = writeln!(out, "payoff table (cost $, unreliability, traffic bit-hops/s):");
        for (label, v) in &self.payoff {
            let _ = writeln!(
                out,
                "  min {label}: {:.2} / {:.6e} / {:.3}",
                v.cost.dollars(),
                v.unreliability,
                v.traffic
            );
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

/// Outcome of one scalarized solve, re-evaluated by the objectives module.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub plan: PlacementPlan,
    pub objectives: ObjectiveVector,
    pub result: SolveResult,
}

/// Result of attempting one scalarized solve.
pub enum SolveAttempt {
    Solved(PlanOutcome),
    Infeasible,
    /// Caps hit before any feasible assignment was found.
    CappedNoPlan,
}

/// Everything needed to pose and solve scalarized placement problems for
/// one case: enumerated states, hop distances and the shared base model.
pub struct Planner {
    pub network: PowerNetwork,
    pub params: CaseParameters,
    pub options: PlanningOptions,
    pub contingencies: ContingencySet,
    pub distances: DistanceMatrix,
    base: MilpProblem,
}

impl Planner {
    pub fn from_case(case: &Case) -> Result<Planner, ScanError> {
        let config = case.contingency_config()?;
        let contingencies = enumerate_states(&case.network, &config)?;
        let distances = case.network.hop_distances()?;
        let base = build_model(&case.network, &case.params, &case.options, &contingencies)?;
        Ok(Planner {
            network: case.network.clone(),
            params: case.params.clone(),
            options: case.options.clone(),
            contingencies,
            distances,
            base,
        })
    }

    pub fn base_model(&self) -> &MilpProblem {
        &self.base
    }

    pub fn evaluate_plan(&self, plan: &PlacementPlan) -> Result<ObjectiveVector, TrafficError> {
        evaluate(
            plan,
            &self.network,
            &self.params,
            &self.options,
            &self.contingencies,
            &self.distances,
        )
    }

    /// Minimizes one weighted combination of the objective expressions
    /// under optional epsilon bounds. The best feasible seed (if any) is
    /// used as the starting incumbent.
    pub fn solve_weighted(
        &self,
        label: &str,
        weights: &[(ObjectiveKind, f64)],
        bounds: &[(ObjectiveKind, f64)],
        limits: &SolveLimits,
        seeds: &[Vec<f64>],
        backend: &Backend,
    ) -> Result<SolveAttempt, ScanError> {
        let mut model = self.base.clone();
        for &(kind, bound) in bounds {
            model.add_objective_bound(kind, bound, &format!("eps_{}", kind.label()));
        }
        let problem = model.scalarized(label, weights);

        let result = match backend {
            Backend::Embedded => {
                let objective = problem
                    .objective
                    .as_ref()
                    .expect("scalarized problem has an objective");
                let seed = seeds
                    .iter()
                    .filter(|seed| {
                        seed.len() == problem.variables.len()
                            && problem.first_violation(seed, 1e-6).is_none()
                    })
                    .min_by(|a, b| {
                        objective
                            .expr
                            .value(a)
                            .partial_cmp(&objective.expr.value(b))
                            .expect("objective values are finite")
                    });
                solve_with_incumbent(&problem, limits, seed.map(|s| s.as_slice()))?
            }
            Backend::External(solver) => delegate(&problem, solver, None)?,
        };
        match result.status {
            SolveStatus::Infeasible => Ok(SolveAttempt::Infeasible),
            SolveStatus::CapExceeded if result.assignment.is_empty() => {
                Ok(SolveAttempt::CappedNoPlan)
            }
            _ => {
                let plan = extract_plan(
                    &problem,
                    &result.assignment,
                    &self.network,
                    &self.params,
                    &self.options,
                )?;
                let objectives = self.evaluate_plan(&plan)?;
                Ok(SolveAttempt::Solved(PlanOutcome {
                    plan,
                    objectives,
                    result,
                }))
            }
        }
    }

    /// Single-objective minimization (a payoff-table row).
    pub fn solve_single(
        &self,
        kind: ObjectiveKind,
        limits: &SolveLimits,
        seeds: &[Vec<f64>],
        backend: &Backend,
    ) -> Result<SolveAttempt, ScanError> {
        self.solve_weighted(kind.label(), &[(kind, 1.0)], &[], limits, seeds, backend)
    }

    /// Single-objective solves for every active objective, warm-started in
    /// sequence. Errors with `Infeasible` when the case admits no plan.
    pub fn payoff(
        &self,
        objectives: &[ObjectiveKind],
        limits: &SolveLimits,
        backend: &Backend,
    ) -> Result<Vec<(ObjectiveKind, PlanOutcome)>, ScanError> {
        let mut rows: Vec<(ObjectiveKind, PlanOutcome)> = Vec::with_capacity(objectives.len());
        let mut seeds: Vec<Vec<f64>> = Vec::new();
        for &kind in objectives {
            match self.solve_single(kind, limits, &seeds, backend)? {
                SolveAttempt::Solved(outcome) => {
                    seeds.push(outcome.result.assignment.clone());
                    rows.push((kind, outcome));
                }
                SolveAttempt::Infeasible => return Err(ScanError::Infeasible),
                SolveAttempt::CappedNoPlan => {
                    return Err(ScanError::PayoffCapped {
                        objective: kind.label(),
                    })
                }
            }
        }
        Ok(rows)
    }

    /// Epsilon-constraint scan: minimize the primary objective under a
    /// descending grid of upper bounds on the constrained objectives,
    /// lexicographically tightening every cell optimum so each returned
    /// point is Pareto-optimal. Grid rows run concurrently; within a row
    /// the sweep skips bound levels that provably reproduce the previous
    /// cell's optimum.
    pub fn epsilon_scan(
        &self,
        objectives: &[ObjectiveKind],
        resolution: usize,
        limits: &SolveLimits,
        backend: &Backend,
    ) -> Result<ParetoFrontier, ScanError> {
        if objectives.len() < 2 {
            return Err(ScanError::TooFewObjectives);
        }
        let primary = objectives[0];
        let constrained = &objectives[1..];
        let resolution = resolution.max(1);

        let payoff = self.payoff(objectives, limits, backend)?;
        let mut report = ScanReport {
            method: "epsilon".to_string(),
            resolution,
            payoff: payoff
                .iter()
                .map(|(kind, outcome)| (kind.label().to_string(), outcome.objectives))
                .collect(),
            solves: payoff.len(),
            ..ScanReport::default()
        };
        let seeds: Vec<Vec<f64>> = payoff
            .iter()
            .map(|(_, outcome)| outcome.result.assignment.clone())
            .collect();

        let ideal = |kind: ObjectiveKind| -> f64 {
            payoff
                .iter()
                .map(|(_, o)| o.objectives.get(kind))
                .fold(f64::INFINITY, f64::min)
        };
        let nadir = |kind: ObjectiveKind| -> f64 {
            payoff
                .iter()
                .map(|(_, o)| o.objectives.get(kind))
                .fold(f64::NEG_INFINITY, f64::max)
        };

        let outer_kind = constrained[0];
        let outer_levels = grid_levels(ideal(outer_kind), nadir(outer_kind), resolution);
        let inner = constrained.get(1).copied();

        let mut points: Vec<ParetoPoint> = payoff
            .iter()
            .map(|(kind, outcome)| ParetoPoint {
                plan: outcome.plan.clone(),
                objectives: outcome.objectives,
                provenance: format!("single:{}", kind.label()),
            })
            .collect();
        let mut capped = 0usize;
        let mut shared_seeds = seeds.clone();

        // The tightest outer row runs first: its points satisfy every outer
        // bound, so their assignments seed all later rows with feasible
        // incumbents and keep hard cells from searching incumbent-free.
        let (tightest, rest_levels) = outer_levels.split_last().expect("grid is nonempty");
        let priming = self.epsilon_row(
            primary,
            constrained,
            outer_kind,
            tightest,
            inner,
            &ideal,
            &nadir,
            resolution,
            limits,
            &shared_seeds,
            backend,
        )?;
        if priming.infeasible {
            return Err(ScanError::Infeasible);
        }
        report.solves += priming.solves;
        capped += priming.capped;
        shared_seeds.extend(priming.assignments.iter().cloned());
        points.extend(priming.points);

        // Remaining rows descend sequentially. A fully solved row whose
        // points top out at some achieved outer value makes every level at
        // or above that value provably reproduce the same row, so those
        // levels are skipped outright.
        let mut skip_at_or_above: Option<f64> = None;
        for outer_level in rest_levels {
            if let (Some(level), Some(skip)) = (outer_level, skip_at_or_above) {
                if *level >= skip {
                    continue;
                }
            }
            let row = self.epsilon_row(
                primary,
                constrained,
                outer_kind,
                outer_level,
                inner,
                &ideal,
                &nadir,
                resolution,
                limits,
                &shared_seeds,
                backend,
            )?;
            report.solves += row.solves;
            capped += row.capped;
            if row.infeasible {
                break;
            }
            skip_at_or_above = if row.capped == 0 && !row.points.is_empty() {
                Some(
                    row.points
                        .iter()
                        .map(|p| p.objectives.get(outer_kind))
                        .fold(f64::NEG_INFINITY, f64::max),
                )
            } else {
                None
            };
            shared_seeds.extend(row.assignments.iter().cloned());
            points.extend(row.points);
        }
        report.capped_solves = capped;
        let points = non_dominated_filter(points);
        report.points = points.len();
        push_grid_notes(&mut report, objectives, capped);
        Ok(ParetoFrontier {
            points,
            complete: capped == 0,
            report,
        })
    }

    /// One row of the epsilon grid: a fixed outer bound with a descending
    /// sweep over the inner objective (when present). The sweep skips
    /// levels at or above the previous cell's achieved value (those cells
    /// provably reproduce it) and gives up on the row once a cell caps
    /// with no plan, since tighter cells are at least as hard.
    #[allow(clippy::too_many_arguments)]
    fn epsilon_row(
        &self,
        primary: ObjectiveKind,
        constrained: &[ObjectiveKind],
        outer_kind: ObjectiveKind,
        outer_level: &Option<f64>,
        inner: Option<ObjectiveKind>,
        ideal: &dyn Fn(ObjectiveKind) -> f64,
        nadir: &dyn Fn(ObjectiveKind) -> f64,
        resolution: usize,
        limits: &SolveLimits,
        seeds: &[Vec<f64>],
        backend: &Backend,
    ) -> Result<RowResult, ScanError> {
        let mut row = RowResult {
            points: Vec::new(),
            assignments: Vec::new(),
            solves: 0,
            capped: 0,
            infeasible: false,
        };
        let mut outer_bounds: Vec<(ObjectiveKind, f64)> = Vec::new();
        if let Some(bound) = outer_level {
            outer_bounds.push((outer_kind, with_slack(outer_kind, *bound)));
        }
        match inner {
            None => {
                match self.epsilon_cell(
                    primary,
                    constrained,
                    &outer_bounds,
                    limits,
                    seeds,
                    backend,
                    &mut row.solves,
                    &mut row.capped,
                )? {
                    CellResult::Point { point, assignment } => {
                        row.points.push(point);
                        row.assignments.push(assignment);
                    }
                    CellResult::Infeasible => row.infeasible = true,
                    CellResult::Capped => {}
                }
            }
            Some(inner_kind) => {
                let inner_levels = grid_levels(ideal(inner_kind), nadir(inner_kind), resolution);
                let mut skip_inner: Option<f64> = None;
                let mut seeds_for_row: Vec<Vec<f64>> = seeds.to_vec();
                for (cell_idx, inner_level) in inner_levels.iter().enumerate() {
                    if let (Some(level), Some(skip)) = (inner_level, skip_inner) {
                        if *level >= skip {
                            continue;
                        }
                    }
                    let mut bounds = outer_bounds.clone();
                    if let Some(bound) = inner_level {
                        bounds.push((inner_kind, with_slack(inner_kind, *bound)));
                    }
                    match self.epsilon_cell(
                        primary,
                        constrained,
                        &bounds,
                        limits,
                        &seeds_for_row,
                        backend,
                        &mut row.solves,
                        &mut row.capped,
                    )? {
                        // Bounds only tighten further down the sweep;
                        // infeasible stays infeasible.
                        CellResult::Infeasible => {
                            if cell_idx == 0 {
                                row.infeasible = true;
                            }
                            break;
                        }
                        CellResult::Capped => break,
                        CellResult::Point { point, assignment } => {
                            skip_inner = Some(point.objectives.get(inner_kind));
                            seeds_for_row.push(assignment.clone());
                            row.points.push(point);
                            row.assignments.push(assignment);
                        }
                    }
                }
            }
        }
        Ok(row)
    }

    /// One epsilon cell with lexicographic tightening: minimize the
    /// primary under the bounds, then in turn minimize each constrained
    /// objective while pinning everything already minimized.
    #[allow(clippy::too_many_arguments)]
    fn epsilon_cell(
        &self,
        primary: ObjectiveKind,
        constrained: &[ObjectiveKind],
        bounds: &[(ObjectiveKind, f64)],
        limits: &SolveLimits,
        seeds: &[Vec<f64>],
        backend: &Backend,
        solves: &mut usize,
        capped: &mut usize,
    ) -> Result<CellResult, ScanError> {
        let provenance = {
            let mut s = format!("epsilon min {}", primary.label());
            for (kind, bound) in bounds {
                let _ = write!(s, " {}<={:.6e}", kind.label(), bound);
            }
            s
        };
        *solves += 1;
        let trace = std::env::var_os("WAMS_TRACE").is_some();
        let clock = std::time::Instant::now();
        let first = self.solve_weighted(
            primary.label(),
            &[(primary, 1.0)],
            bounds,
            limits,
            seeds,
            backend,
        )?;
        if trace {
            eprintln!("[trace] cell {provenance}: first solve {:?}", clock.elapsed());
        }
        let mut outcome = match first {
            SolveAttempt::Infeasible => return Ok(CellResult::Infeasible),
            SolveAttempt::CappedNoPlan => {
                *capped += 1;
                return Ok(CellResult::Capped);
            }
            SolveAttempt::Solved(outcome) => outcome,
        };
        if outcome.result.status == SolveStatus::CapExceeded {
            *capped += 1;
            return Ok(CellResult::Point {
                assignment: outcome.result.assignment.clone(),
                point: ParetoPoint {
                    plan: outcome.plan,
                    objectives: outcome.objectives,
                    provenance: format!("{provenance} [capped]"),
                },
            });
        }

        let mut pinned: Vec<(ObjectiveKind, f64)> = bounds.to_vec();
        pinned.push((
            primary,
            with_slack(primary, outcome.objectives.get(primary)),
        ));
        for &kind in constrained {
            *solves += 1;
            let seed = vec![outcome.result.assignment.clone()];
            let clock = std::time::Instant::now();
            let stage = self.solve_weighted(
                kind.label(),
                &[(kind, 1.0)],
                &pinned,
                limits,
                &seed,
                backend,
            )?;
            if trace {
                eprintln!(
                    "[trace] cell {provenance}: stage {} {:?}",
                    kind.label(),
                    clock.elapsed()
                );
            }
            match stage {
                SolveAttempt::Solved(next)
                    if next.result.status != SolveStatus::CapExceeded =>
                {
                    pinned.push((kind, with_slack(kind, next.objectives.get(kind))));
                    outcome = next;
                }
                SolveAttempt::Solved(_) | SolveAttempt::CappedNoPlan => {
                    *capped += 1;
                    break;
                }
                // The pinned system is feasible by construction; an
                // infeasible stage means the slack was exhausted by float
                // rounding. Keep the current outcome.
                SolveAttempt::Infeasible => break,
            }
        }
        Ok(CellResult::Point {
            assignment: outcome.result.assignment.clone(),
            point: ParetoPoint {
                plan: outcome.plan,
                objectives: outcome.objectives,
                provenance,
            },
        })
    }

    /// Bounded weighted-sum scan: one solve per weight vector on the grid,
    /// objectives normalized by their payoff values. Finds supported
    /// frontier points only.
    pub fn weighted_scan(
        &self,
        objectives: &[ObjectiveKind],
        grid: usize,
        limits: &SolveLimits,
        backend: &Backend,
    ) -> Result<ParetoFrontier, ScanError> {
        if objectives.len() < 2 {
            return Err(ScanError::TooFewObjectives);
        }
        let grid = grid.max(1);
        let payoff = self.payoff(objectives, limits, backend)?;
        let mut report = ScanReport {
            method: "weighted".to_string(),
            resolution: grid,
            payoff: payoff
                .iter()
                .map(|(kind, outcome)| (kind.label().to_string(), outcome.objectives))
                .collect(),
            solves: payoff.len(),
            ..ScanReport::default()
        };
        let seeds: Vec<Vec<f64>> = payoff
            .iter()
            .map(|(_, outcome)| outcome.result.assignment.clone())
            .collect();

        // Normalization: the single-objective optimum, or the nadir
        // estimate when that optimum is zero.
        let norm: Vec<f64> = objectives
            .iter()
            .map(|&kind| {
                let ideal = payoff
                    .iter()
                    .map(|(_, o)| o.objectives.get(kind))
                    .fold(f64::INFINITY, f64::min);
                let nadir = payoff
                    .iter()
                    .map(|(_, o)| o.objectives.get(kind))
                    .fold(f64::NEG_INFINITY, f64::max);
                if ideal.abs() > 1e-9 {
                    ideal.abs()
                } else if nadir.abs() > 1e-9 {
                    nadir.abs()
                } else {
                    1.0
                }
            })
            .collect();

        let vectors = weight_vectors(objectives.len(), grid);
        struct Cell {
            point: Option<ParetoPoint>,
            capped: bool,
        }
        let cells: Vec<Result<Cell, ScanError>> = crate::par::map_slice(&vectors, |vector| {
            let weights: Vec<(ObjectiveKind, f64)> = objectives
                .iter()
                .zip(vector.iter())
                .enumerate()
                .map(|(idx, (&kind, &w))| (kind, w as f64 / norm[idx]))
                .collect();
            let label: Vec<String> = vector.iter().map(|w| w.to_string()).collect();
            let label = format!("weighted {}", label.join("/"));
            Ok(
                match self.solve_weighted(&label, &weights, &[], limits, &seeds, backend)? {
                    SolveAttempt::Infeasible => Cell {
                        point: None,
                        capped: false,
                    },
                    SolveAttempt::CappedNoPlan => Cell {
                        point: None,
                        capped: true,
                    },
                    SolveAttempt::Solved(outcome) => Cell {
                        capped: outcome.result.status == SolveStatus::CapExceeded,
                        point: Some(ParetoPoint {
                            plan: outcome.plan,
                            objectives: outcome.objectives,
                            provenance: label,
                        }),
                    },
                },
            )
        });

        let mut points: Vec<ParetoPoint> = payoff
            .iter()
            .map(|(kind, outcome)| ParetoPoint {
                plan: outcome.plan.clone(),
                objectives: outcome.objectives,
                provenance: format!("single:{}", kind.label()),
            })
            .collect();
        let mut capped = 0usize;
        for cell in cells {
            let cell = cell?;
            report.solves += 1;
            if cell.capped {
                capped += 1;
            }
            points.extend(cell.point);
        }
        report.capped_solves = capped;
        let points = non_dominated_filter(points);
        report.points = points.len();
        report.notes.push(
            "weighted-sum scalarization finds supported frontier points only; \
             unsupported points require the epsilon method"
                .to_string(),
        );
        if capped > 0 {
            report
                .notes
                .push(format!("{capped} solves hit caps; frontier flagged partial"));
        }
        Ok(ParetoFrontier {
            points,
            complete: capped == 0,
            report,
        })
    }
}

struct RowResult {
    points: Vec<ParetoPoint>,
    assignments: Vec<Vec<f64>>,
    solves: usize,
    capped: usize,
    /// The row's loosest cell was already infeasible: every tighter outer
    /// bound is infeasible too.
    infeasible: bool,
}

enum CellResult {
    Point {
        point: ParetoPoint,
        assignment: Vec<f64>,
    },
    Infeasible,
    Capped,
}

/// Descending bound levels: one unbounded cell, then `resolution + 1`
/// uniform levels from the nadir estimate down to the ideal.
fn grid_levels(ideal: f64, nadir: f64, resolution: usize) -> Vec<Option<f64>> {
    let mut levels: Vec<Option<f64>> = vec![None];
    if !(nadir - ideal).is_finite() {
        return levels;
    }
    let span = nadir - ideal;
    let mut last: Option<f64> = None;
    for t in (0..=resolution).rev() {
        let value = ideal + span * t as f64 / resolution as f64;
        if last.is_some_and(|prev| (prev - value).abs() < 1e-12 * (1.0 + value.abs())) {
            continue;
        }
        last = Some(value);
        levels.push(Some(value));
    }
    levels
}

/// Feasibility slack so a bound at an achieved objective value keeps the
/// achieving plan inside the feasible set despite float rounding. Cost is
/// integral cents, so half a cent is exact.
fn with_slack(kind: ObjectiveKind, value: f64) -> f64 {
    match kind {
        ObjectiveKind::Cost => value + 0.5,
        ObjectiveKind::Unreliability => value + 1e-9 * (1.0 + value.abs()),
        ObjectiveKind::Traffic => value + 1e-6 * (1.0 + value.abs()),
    }
}

/// All weight vectors of `dims` nonnegative integers summing to `grid`,
/// in lexicographic order.
fn weight_vectors(dims: usize, grid: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; dims];
    fn recurse(dim: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim + 1 == current.len() {
            current[dim] = remaining;
            out.push(current.clone());
            return;
        }
        for w in 0..=remaining {
            current[dim] = w;
            recurse(dim + 1, remaining - w, current, out);
        }
    }
    recurse(0, grid, &mut current, &mut out);
    out
}

fn push_grid_notes(report: &mut ScanReport, objectives: &[ObjectiveKind], capped: usize) {
    let labels: Vec<&str> = objectives.iter().map(|k| k.label()).collect();
    report.notes.push(format!(
        "epsilon grid: minimize {} under {} + 1 uniform upper-bound levels (plus one unbounded \
         level) per constrained objective ({}), spanning the payoff-table ideal..nadir range; \
         each cell optimum is tightened lexicographically; bound levels falling between two \
         adjacent achievable objective values collapse onto the same optimum, and frontier \
         points whose constrained values lie strictly inside one grid interval can be missed \
         at this resolution",
        labels[0],
        report.resolution,
        labels[1..].join(", "),
    ));
    report.notes.push(
        "unreliability is evaluated over the configured outage states (default: base state \
         plus single outages of non-transformer lines)"
            .to_string(),
    );
    if capped > 0 {
        report
            .notes
            .push(format!("{capped} solves hit caps; frontier flagged partial"));
    }
}

/// Keeps exactly the non-dominated points, in stable order, deduplicating
/// equal objective vectors (first plan wins); the result is then sorted
/// lexicographically by (cost, unreliability, traffic).
pub fn non_dominated_filter(points: Vec<ParetoPoint>) -> Vec<ParetoPoint> {
    let mut kept: Vec<ParetoPoint> = Vec::new();
    'candidates: for candidate in points {
        for existing in &kept {
            if existing.objectives.dominates(&candidate.objectives)
                || existing.objectives == candidate.objectives
            {
                continue 'candidates;
            }
        }
        kept.retain(|existing| !candidate.objectives.dominates(&existing.objectives));
        kept.push(candidate);
    }
    kept.sort_by(|a, b| {
        (a.objectives.cost, a.objectives.unreliability, a.objectives.traffic)
            .partial_cmp(&(b.objectives.cost, b.objectives.unreliability, b.objectives.traffic))
            .expect("objective values are finite")
    });
    kept
}

/// CSV with one row per frontier point.
pub fn frontier_csv(frontier: &ParetoFrontier) -> String {
    let mut out =
        String::from("plan_id,cost_dollars,unreliability,traffic_bit_hops_per_s,provenance\n");
    for (idx, point) in frontier.points.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{:.2},{:.6e},{:.3},{}",
            idx + 1,
            point.objectives.cost.dollars(),
            point.objectives.unreliability,
            point.objectives.traffic,
            point.provenance
        );
    }
    out
}

/// CSV projection of the frontier onto two objectives.
pub fn projection_csv(frontier: &ParetoFrontier, x: ObjectiveKind, y: ObjectiveKind) -> String {
    let fmt = |kind: ObjectiveKind, v: &ObjectiveVector| -> String {
        match kind {
            ObjectiveKind::Cost => format!("{:.2}", v.cost.dollars()),
            ObjectiveKind::Unreliability => format!("{:.6e}", v.unreliability),
            ObjectiveKind::Traffic => format!("{:.3}", v.traffic),
        }
    };
    let mut out = format!("plan_id,{},{}\n", x.label(), y.label());
    for (idx, point) in frontier.points.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            idx + 1,
            fmt(x, &point.objectives),
            fmt(y, &point.objectives)
        );
    }
    out
}

/// JSON document with full plans for every frontier point.
pub fn frontier_json(frontier: &ParetoFrontier, network: &PowerNetwork) -> String {
    let points: Vec<serde_json::Value> = frontier
        .points
        .iter()
        .enumerate()
        .map(|(idx, point)| {
            let plan: serde_json::Value =
                serde_json::from_str(&point.plan.to_json(network)).expect("plan json");
            serde_json::json!({
                "plan_id": idx + 1,
                "cost_dollars": point.objectives.cost.dollars(),
                "unreliability": point.objectives.unreliability,
                "traffic_bit_hops_per_s": point.objectives.traffic,
                "provenance": point.provenance,
                "plan": plan,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "complete": frontier.complete,
        "points": points,
    });
    serde_json::to_string_pretty(&doc).expect("frontier json")
}
