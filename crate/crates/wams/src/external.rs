//! Delegation of scalarized solves to an external solver binary through
//! the LP text format. Anything the external tool returns is re-verified
//! against every constraint and the objective before it is accepted.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use thiserror::Error;

use crate::milp::{export_lp, MilpProblem};
use crate::solver::{SolveResult, SolveStatus};

/// Command template for an external solver. `{model}` and `{solution}` are
/// replaced by the LP file path and the expected solution file path, e.g.
/// `glpsol --lp {model} -o {solution}` or `cbc {model} solve solution {solution}`.
#[derive(Clone, Debug)]
pub struct ExternalSolver {
    pub template: String,
}

impl ExternalSolver {
    pub fn new(template: impl Into<String>) -> ExternalSolver {
        ExternalSolver {
            template: template.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum DelegateError {
    #[error("problem has no scalarized objective; select one before delegating")]
    NoObjective,
    #[error("solver template must mention both {{model}} and {{solution}}")]
    BadTemplate,
    #[error("could not run external solver {command:?}: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("external solver exited with {code:?}: {stderr}")]
    Failed { code: Option<i32>, stderr: String },
    #[error("could not read solution file {path}: {source}")]
    UnreadableSolution {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("solution file mentions no model variables")]
    EmptySolution,
    #[error("solution value for {name} is not binary: {value}")]
    NonBinary { name: String, value: f64 },
    #[error("external answer rejected: violates {name}")]
    Verification { name: String },
    #[error("external answer rejected: claimed objective {claimed} but terms evaluate to {actual}")]
    ObjectiveMismatch { claimed: f64, actual: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

static SCRATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

fn scratch_dir() -> std::io::Result<PathBuf> {
    let stamp = SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!(
        "wams-delegate-{}-{stamp}",
        std::process::id()
    ));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Runs the external solver on the scalarized problem and returns its
/// verified result. The solution is parsed leniently (GLPK plain-text,
/// CBC solution files and bare `name value` listings all work), then
/// checked strictly.
pub fn delegate(
    problem: &MilpProblem,
    solver: &ExternalSolver,
    workdir: Option<&Path>,
) -> Result<SolveResult, DelegateError> {
    let objective = problem.objective.as_ref().ok_or(DelegateError::NoObjective)?;
    if !solver.template.contains("{model}") || !solver.template.contains("{solution}") {
        return Err(DelegateError::BadTemplate);
    }

    let (dir, cleanup) = match workdir {
        Some(dir) => (dir.to_path_buf(), false),
        None => (scratch_dir()?, true),
    };
    let model_path = dir.join("model.lp");
    let solution_path = dir.join("solution.txt");
    {
        let mut file = fs::File::create(&model_path)?;
        export_lp(problem, &mut file)?;
    }

    let start = Instant::now();
    let tokens: Vec<String> = solver
        .template
        .split_whitespace()
        .map(|tok| {
            tok.replace("{model}", &model_path.to_string_lossy())
                .replace("{solution}", &solution_path.to_string_lossy())
        })
        .collect();
    let output = Command::new(&tokens[0])
        .args(&tokens[1..])
        .output()
        .map_err(|source| DelegateError::Spawn {
            command: tokens[0].clone(),
            source,
        })?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        let tail: String = stderr.chars().rev().take(400).collect::<String>();
        return Err(DelegateError::Failed {
            code: output.status.code(),
            stderr: tail.chars().rev().collect(),
        });
    }

    let text = fs::read_to_string(&solution_path).map_err(|source| {
        DelegateError::UnreadableSolution {
            path: solution_path.clone(),
            source,
        }
    })?;
    let result = interpret_solution(problem, objective, &text, start.elapsed());
    if cleanup {
        let _ = fs::remove_dir_all(&dir);
    }
    result
}

fn interpret_solution(
    problem: &MilpProblem,
    objective: &crate::milp::ScalarObjective,
    text: &str,
    wall: std::time::Duration,
) -> Result<SolveResult, DelegateError> {
    let lowered = text.to_lowercase();
    if lowered.contains("infeasible") || lowered.contains("no primal feasible") {
        return Ok(SolveResult {
            status: SolveStatus::Infeasible,
            assignment: Vec::new(),
            objective: f64::INFINITY,
            bound: f64::INFINITY,
            node_count: 0,
            wall,
        });
    }

    let mut name_to_idx = std::collections::HashMap::new();
    for (idx, var) in problem.variables.iter().enumerate() {
        name_to_idx.insert(var.name.as_str(), idx);
    }

    // Absent variables default to their lower bound, which covers solvers
    // that print only nonzero activities.
    let mut assignment: Vec<f64> = problem.variables.iter().map(|v| v.lower).collect();
    let mut seen = 0usize;
    let mut claimed: Option<f64> = None;
    for line in text.lines() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if claimed.is_none() {
            // "Objective:  obj = 169648.99 (MINimum)" or
            // "Optimal - objective value 169648.99".
            if let Some(pos) = tokens.iter().position(|t| {
                t.eq_ignore_ascii_case("objective") || t.eq_ignore_ascii_case("objective:")
            }) {
                claimed = tokens[pos + 1..]
                    .iter()
                    .find_map(|t| t.parse::<f64>().ok());
            }
        }
        let Some(name_pos) = tokens.iter().position(|t| name_to_idx.contains_key(t)) else {
            continue;
        };
        let idx = name_to_idx[tokens[name_pos]];
        let Some(value) = tokens[name_pos + 1..]
            .iter()
            .find_map(|t| t.parse::<f64>().ok())
        else {
            continue;
        };
        assignment[idx] = value;
        seen += 1;
    }
    if seen == 0 {
        return Err(DelegateError::EmptySolution);
    }

    for (idx, var) in problem.variables.iter().enumerate() {
        let x = assignment[idx];
        if (x - x.round()).abs() > 1e-4 || !(-0.5..=1.5).contains(&x) {
            return Err(DelegateError::NonBinary {
                name: var.name.clone(),
                value: x,
            });
        }
        assignment[idx] = x.round();
    }

    if let Some(name) = problem.first_violation(&assignment, 1e-6) {
        return Err(DelegateError::Verification { name });
    }
    let terms_value: f64 = objective
        .expr
        .terms
        .iter()
        .map(|&(v, c)| c * assignment[v])
        .sum();
    if let Some(claimed) = claimed {
        let tol = 1e-6 * (1.0 + claimed.abs().max(terms_value.abs()));
        if (claimed - terms_value).abs() > tol.max(1e-4) {
            return Err(DelegateError::ObjectiveMismatch {
                claimed,
                actual: terms_value,
            });
        }
    }

    Ok(SolveResult {
        status: SolveStatus::Optimal,
        assignment,
        objective: terms_value + objective.expr.constant,
        bound: terms_value + objective.expr.constant,
        node_count: 0,
        wall,
    })
}
