//! Command-line interface: load cases, run single-objective plans, sweep
//! frontiers, evaluate plan files, export models. Exit codes: 0 success,
//! 1 usage or I/O failure, 2 infeasible, 3 caps hit (partial result).
//! Everything written to stdout and to files is byte-deterministic for
//! identical inputs and flags; timing diagnostics go to stderr.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::case::{self, Case, FailableSpec};
use crate::contingency::unreliability;
use crate::external::ExternalSolver;
use crate::milp::export_lp;
use crate::network::Money;
use crate::objectives::ObjectiveKind;
use crate::oracle;
use crate::pareto::{
    frontier_csv, frontier_json, projection_csv, Backend, ParetoFrontier, Planner, ScanError,
    SolveAttempt, DEFAULT_RESOLUTION, DEFAULT_WEIGHT_GRID,
};
use crate::plan::{check_plan, PlacementPlan};
use crate::solver::{SolveLimits, SolveStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "wams",
    about = "Wide-area measurement system construction planning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one optimal plan for a single objective.
    Plan(PlanArgs),
    /// Sweep the Pareto frontier and write its artifacts.
    Frontier(FrontierArgs),
    /// Evaluate a plan file against a case.
    Evaluate(EvaluateArgs),
    /// Export the optimization model in LP text format.
    ExportLp(ExportArgs),
    /// Brute-force reference computations for fixture regeneration.
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Args)]
struct CaseArgs {
    /// Built-in case name (ieee9, ieee57) or path to a case file.
    case: String,
    /// Forbid installations at this bus (repeatable).
    #[arg(long = "prohibit-bus", value_name = "BUS")]
    prohibit_bus: Vec<u32>,
    /// Pre-installed PMU, as BUS:OBS,OBS,... (repeatable).
    #[arg(long = "existing-pmu", value_name = "BUS:OBS,..")]
    existing_pmu: Vec<String>,
    /// Per-bus redundancy degree, as BUS=T (repeatable).
    #[arg(long = "redundancy", value_name = "BUS=T")]
    redundancy: Vec<String>,
    /// Override the per-PMU measurement channel limit.
    #[arg(long = "channel-limit", value_name = "N")]
    channel_limit: Option<u32>,
    /// Upper bound on construction cost in dollars.
    #[arg(long = "max-budget", value_name = "DOLLARS")]
    max_budget: Option<f64>,
    /// Upper bound on the unreliability index.
    #[arg(long = "max-unreliability", value_name = "X")]
    max_unreliability: Option<f64>,
    /// Failable branch policy: non_transformer or all.
    #[arg(long = "failable", value_name = "POLICY")]
    failable: Option<String>,
    /// Maximum simultaneous outages to enumerate.
    #[arg(long = "max-order", value_name = "K")]
    max_order: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    /// Node cap per scalarized solve.
    #[arg(long = "max-nodes", default_value_t = 1_000_000)]
    max_nodes: u64,
    /// Wall-clock cap per scalarized solve, in seconds.
    #[arg(long = "time-limit", value_name = "SECS", default_value_t = 600)]
    time_limit: u64,
    /// External solver command template with {model} and {solution}
    /// placeholders; overrides the embedded solver. Defaults to the
    /// WAMS_EXTERNAL_SOLVER environment variable when set.
    #[arg(long = "delegate", value_name = "TEMPLATE")]
    delegate: Option<String>,
}

impl SolveArgs {
    fn limits(&self) -> SolveLimits {
        SolveLimits {
            max_nodes: self.max_nodes,
            time_limit: Some(std::time::Duration::from_secs(self.time_limit)),
        }
    }

    fn backend(&self) -> Backend {
        let template = self
            .delegate
            .clone()
            .or_else(|| std::env::var("WAMS_EXTERNAL_SOLVER").ok());
        match template {
            Some(template) if !template.is_empty() => {
                Backend::External(ExternalSolver::new(template))
            }
            _ => Backend::Embedded,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Objective to minimize: cost, unreliability or traffic.
    #[arg(long, default_value = "cost", value_parser = parse_objective_arg)]
    objective: ObjectiveKind,
    #[command(flatten)]
    solve: SolveArgs,
    /// Write the plan as JSON to this path.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also export the scalarized model in LP format to this path.
    #[arg(long, value_name = "FILE")]
    lp: Option<PathBuf>,
}

#[derive(Args)]
struct FrontierArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Scalarization method: epsilon or weighted.
    #[arg(long, default_value = "epsilon")]
    method: String,
    /// Epsilon grid subdivisions per constrained objective.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    /// Weighted-sum grid density.
    #[arg(long, default_value_t = DEFAULT_WEIGHT_GRID)]
    grid: usize,
    /// Objectives in scan order (primary first), comma separated.
    #[arg(
        long,
        value_name = "LIST",
        default_value = "cost,unreliability,traffic"
    )]
    objectives: String,
    /// Output directory for frontier artifacts.
    #[arg(long = "out-dir", value_name = "DIR", default_value = "frontier-out")]
    out_dir: PathBuf,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Plan file to evaluate.
    plan: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Objective for the LP objective section.
    #[arg(long, default_value = "cost", value_parser = parse_objective_arg)]
    objective: ObjectiveKind,
    /// Output path for the LP text.
    #[arg(long, value_name = "FILE", default_value = "model.lp")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(subcommand)]
    command: OracleCommand,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exhaustive optimal placement on a tiny case.
    Plan {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value = "cost", value_parser = parse_objective_arg)]
        objective: ObjectiveKind,
    },
    /// Exact unreliability of a plan by complete outage enumeration.
    Unreliability {
        #[command(flatten)]
        case: CaseArgs,
        plan: PathBuf,
    },
}

/// Entry point used by the binary and by tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes.
            let _ = err.print();
            return if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Frontier(args) => cmd_frontier(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::ExportLp(args) => cmd_export_lp(args),
        Command::Oracle(args) => cmd_oracle(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            EXIT_USAGE
        }
    }
}

fn load_case(args: &CaseArgs) -> Result<Case> {
    let mut case = if case::builtin_names().contains(&args.case.as_str()) {
        case::builtin(&args.case)?
    } else {
        let file = fs::File::open(&args.case)
            .with_context(|| format!("cannot open case file {}", args.case))?;
        case::load_case(file)?
    };

    let need_bus = |case: &Case, id: u32| -> Result<usize> {
        case.network
            .bus_index(id)
            .ok_or_else(|| anyhow!("bus {id} is not part of the case"))
    };
    for &bus in &args.prohibit_bus {
        let idx = need_bus(&case, bus)?;
        case.options.prohibited.insert(idx);
    }
    for spec in &args.existing_pmu {
        let (bus, rest) = spec
            .split_once(':')
            .ok_or_else(|| anyhow!("--existing-pmu wants BUS:OBS,OBS,... got {spec:?}"))?;
        let bus = need_bus(&case, bus.trim().parse()?)?;
        let mut observed: BTreeSet<usize> = BTreeSet::new();
        observed.insert(bus);
        for part in rest.split(',') {
            observed.insert(need_bus(&case, part.trim().parse()?)?);
        }
        case.options.existing_pmus.insert(bus, observed);
    }
    for spec in &args.redundancy {
        let (bus, degree) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--redundancy wants BUS=T, got {spec:?}"))?;
        let bus = need_bus(&case, bus.trim().parse()?)?;
        case.options.redundancy.insert(bus, degree.trim().parse()?);
    }
    if let Some(limit) = args.channel_limit {
        case.options.channel_limit = Some(limit);
    }
    if let Some(budget) = args.max_budget {
        case.options.budget_cap = Some(Money::from_dollars(budget)?);
    }
    if let Some(cap) = args.max_unreliability {
        case.options.unreliability_cap = Some(cap);
    }
    if let Some(policy) = &args.failable {
        case.contingency.failable = match policy.as_str() {
            "non_transformer" => FailableSpec::NonTransformer,
            "all" => FailableSpec::All,
            other => bail!("--failable wants non_transformer or all, got {other:?}"),
        };
    }
    if let Some(order) = args.max_order {
        case.contingency.max_order = order;
    }
    case.options.validate(&case.network, &case.params)?;
    Ok(case)
}

fn parse_objectives(list: &str) -> Result<Vec<ObjectiveKind>> {
    let mut kinds = Vec::new();
    for part in list.split(',') {
        let kind: ObjectiveKind = part
            .trim()
            .parse()
            .map_err(|e: String| anyhow!(e))?;
        if kinds.contains(&kind) {
            bail!("objective {} listed twice", kind.label());
        }
        kinds.push(kind);
    }
    Ok(kinds)
}

fn describe(case: &Case) -> String {
    format!(
        "case: {} ({} buses, {} branches, {} substations, controller at bus {})",
        if case.name.is_empty() { "unnamed" } else { &case.name },
        case.network.bus_count(),
        case.network.branches().len(),
        case.network.substation_count(),
        case.network.bus_id(case.network.controller())
    )
}

fn objectives_block(planner: &Planner, plan: &PlacementPlan) -> Result<String> {
    let v = planner.evaluate_plan(plan)?;
    let mut out = String::from("objectives:\n");
    out.push_str(&format!("  cost: {}\n", v.cost));
    out.push_str(&format!("  unreliability: {:.6e}\n", v.unreliability));
    out.push_str(&format!("  traffic: {:.3} bit-hops/s\n", v.traffic));
    Ok(out)
}

fn interrupted_substations(case: &Case, plan: &PlacementPlan) -> String {
    let derived = plan.derived(&case.network, &case.options);
    let groups: Vec<String> = case
        .network
        .substations()
        .iter()
        .enumerate()
        .filter(|(k, _)| derived.interrupted[*k])
        .map(|(_, members)| {
            let ids: Vec<String> = members
                .iter()
                .map(|&i| case.network.bus_id(i).to_string())
                .collect();
            format!("{{{}}}", ids.join(","))
        })
        .collect();
    if groups.is_empty() {
        "none".to_string()
    } else {
        groups.join(", ")
    }
}

fn cmd_plan(args: PlanArgs) -> Result<i32> {
    let case = load_case(&args.case)?;
    let planner = Planner::from_case(&case).map_err(scan_usage)?;

    if let Some(path) = &args.lp {
        let problem = planner
            .base_model()
            .scalarized(args.objective.label(), &[(args.objective, 1.0)]);
        let mut file = fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        export_lp(&problem, &mut file)?;
    }

    let attempt = planner.solve_weighted(
        args.objective.label(),
        &[(args.objective, 1.0)],
        &[],
        &args.solve.limits(),
        &[],
        &args.solve.backend(),
    );
    let outcome = match attempt {
        Ok(SolveAttempt::Solved(outcome)) => outcome,
        Ok(SolveAttempt::Infeasible) => {
            println!("{}", describe(&case));
            println!("status: infeasible");
            return Ok(EXIT_INFEASIBLE);
        }
        Ok(SolveAttempt::CappedNoPlan) => {
            println!("{}", describe(&case));
            println!("status: caps exceeded before any feasible plan was found");
            return Ok(EXIT_PARTIAL);
        }
        Err(err) => return Err(scan_usage(err)),
    };

    println!("{}", describe(&case));
    println!("objective: {}", args.objective.label());
    let capped = outcome.result.status == SolveStatus::CapExceeded;
    if capped {
        println!(
            "status: caps exceeded; best plan found (bound gap {:.2})",
            outcome.result.gap()
        );
    } else {
        println!("status: optimal");
    }
    eprintln!(
        "solved in {:?}, {} nodes",
        outcome.result.wall, outcome.result.node_count
    );
    print!("{}", outcome.plan.format_report(&case.network));
    println!(
        "interrupted substations: {}",
        interrupted_substations(&case, &outcome.plan)
    );
    print!("{}", objectives_block(&planner, &outcome.plan)?);

    if let Some(path) = &args.out {
        fs::write(path, outcome.plan.to_json(&case.network))
            .with_context(|| format!("cannot write {}", path.display()))?;
        println!("plan written to {}", path.display());
    }
    Ok(if capped { EXIT_PARTIAL } else { EXIT_OK })
}

fn write_frontier_artifacts(
    dir: &Path,
    case: &Case,
    frontier: &ParetoFrontier,
) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    fs::write(dir.join("frontier.csv"), frontier_csv(frontier))?;
    fs::write(
        dir.join("frontier.json"),
        frontier_json(frontier, &case.network),
    )?;
    let pairs = [
        (ObjectiveKind::Cost, ObjectiveKind::Unreliability),
        (ObjectiveKind::Cost, ObjectiveKind::Traffic),
        (ObjectiveKind::Unreliability, ObjectiveKind::Traffic),
    ];
    for (x, y) in pairs {
        let name = format!("projection_{}_{}.csv", x.label(), y.label());
        fs::write(dir.join(name), projection_csv(frontier, x, y))?;
    }
    fs::write(dir.join("report.txt"), frontier.report.render())?;
    Ok(())
}

fn cmd_frontier(args: FrontierArgs) -> Result<i32> {
    let case = load_case(&args.case)?;
    let objectives = parse_objectives(&args.objectives)?;
    let planner = Planner::from_case(&case).map_err(scan_usage)?;
    let limits = args.solve.limits();
    let backend = args.solve.backend();

    let started = std::time::Instant::now();
    let frontier = match args.method.as_str() {
        "epsilon" => planner.epsilon_scan(&objectives, args.resolution, &limits, &backend),
        "weighted" => planner.weighted_scan(&objectives, args.grid, &limits, &backend),
        other => bail!("--method wants epsilon or weighted, got {other:?}"),
    };
    let frontier = match frontier {
        Ok(frontier) => frontier,
        Err(ScanError::Infeasible) => {
            println!("{}", describe(&case));
            println!("status: infeasible");
            return Ok(EXIT_INFEASIBLE);
        }
        Err(err) => return Err(scan_usage(err)),
    };
    eprintln!("scan finished in {:?}", started.elapsed());

    println!("{}", describe(&case));
    println!(
        "method: {} (resolution {})",
        frontier.report.method, frontier.report.resolution
    );
    println!("non-dominated points: {}", frontier.points.len());
    for (idx, point) in frontier.points.iter().enumerate() {
        println!(
            "  {:>2}. {:>14} {:>12.6e} {:>14.3}",
            idx + 1,
            point.objectives.cost.to_string(),
            point.objectives.unreliability,
            point.objectives.traffic
        );
    }
    write_frontier_artifacts(&args.out_dir, &case, &frontier)?;
    println!("artifacts written to {}", args.out_dir.display());
    if !frontier.complete {
        println!("warning: some solves hit caps; the frontier may be partial");
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<i32> {
    let case = load_case(&args.case)?;
    let text = fs::read_to_string(&args.plan)
        .with_context(|| format!("cannot read plan file {}", args.plan.display()))?;
    let plan = PlacementPlan::from_json(&text, &case.network)?;

    let violations = check_plan(&plan, &case.network, &case.params, &case.options);
    if !violations.is_empty() {
        println!("{}", describe(&case));
        println!("plan violates {} placement rule(s):", violations.len());
        for violation in &violations {
            println!("  - {violation}");
        }
        return Ok(EXIT_INFEASIBLE);
    }

    let planner = Planner::from_case(&case).map_err(scan_usage)?;
    println!("{}", describe(&case));
    print!("{}", plan.format_report(&case.network));
    println!(
        "interrupted substations: {}",
        interrupted_substations(&case, &plan)
    );
    print!("{}", objectives_block(&planner, &plan)?);
    let report = unreliability(&plan, &planner.contingencies);
    println!("per-bus unreliability:");
    for (i, value) in report.per_bus.iter().enumerate() {
        println!("  bus {}: {:.6e}", case.network.bus_id(i), value);
    }
    Ok(EXIT_OK)
}

fn cmd_export_lp(args: ExportArgs) -> Result<i32> {
    let case = load_case(&args.case)?;
    let planner = Planner::from_case(&case).map_err(scan_usage)?;
    let problem = planner
        .base_model()
        .scalarized(args.objective.label(), &[(args.objective, 1.0)]);
    let mut file = fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    export_lp(&problem, &mut file)?;
    println!(
        "wrote {} ({} variables, {} constraints)",
        args.out.display(),
        problem.variables.len(),
        problem.constraints.len()
    );
    Ok(EXIT_OK)
}

fn cmd_oracle(args: OracleArgs) -> Result<i32> {
    match args.command {
        OracleCommand::Plan { case, objective } => {
            let case = load_case(&case)?;
            let weights = match objective {
                ObjectiveKind::Cost => oracle::ObjectiveWeights::cost_only(),
                ObjectiveKind::Unreliability => oracle::ObjectiveWeights {
                    cost: 0.0,
                    unreliability: 1.0,
                    traffic: 0.0,
                },
                ObjectiveKind::Traffic => oracle::ObjectiveWeights {
                    cost: 0.0,
                    unreliability: 0.0,
                    traffic: 1.0,
                },
            };
            let config = case.contingency_config()?;
            let (plan, value) = oracle::brute_force_plan(
                &case.network,
                &case.params,
                &case.options,
                &weights,
                &config,
            )?;
            println!("{}", describe(&case));
            println!("oracle optimum ({}): {value}", objective.label());
            print!("{}", plan.format_report(&case.network));
            Ok(EXIT_OK)
        }
        OracleCommand::Unreliability { case, plan } => {
            let case = load_case(&case)?;
            let text = fs::read_to_string(&plan)
                .with_context(|| format!("cannot read plan file {}", plan.display()))?;
            let plan = PlacementPlan::from_json(&text, &case.network)?;
            let config = case.contingency_config()?;
            let value =
                oracle::brute_force_unreliability(&plan, &case.network, &config.failable)?;
            println!("full-enumeration unreliability: {value:.12e}");
            Ok(EXIT_OK)
        }
    }
}

fn scan_usage(err: ScanError) -> anyhow::Error {
    anyhow!("{err}")
}

fn parse_objective_arg(raw: &str) -> Result<ObjectiveKind, String> {
    raw.parse()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_lists_parse() {
        let kinds = parse_objectives("cost,unreliability,traffic").unwrap();
        assert_eq!(kinds.len(), 3);
        assert!(parse_objectives("cost,cost").is_err());
        assert!(parse_objectives("bogus").is_err());
    }
}
