//! The exported LP text must be digestible by external tools: this suite
//! re-parses it with an independent little reader and checks the parsed
//! rows, bounds and binaries against the in-memory model.

use std::collections::HashMap;

use wams::contingency::{enumerate_states, ContingencyConfig};
use wams::milp::{build_model, export_lp, Cmp, MilpProblem};
use wams::objectives::ObjectiveKind;

fn nine_problem() -> MilpProblem {
    let case = wams::case::builtin("ieee9").unwrap();
    let config = ContingencyConfig::default_for(&case.network);
    let states = enumerate_states(&case.network, &config).unwrap();
    build_model(&case.network, &case.params, &case.options, &states)
        .unwrap()
        .scalarized("cost", &[(ObjectiveKind::Cost, 1.0)])
}

#[derive(Debug, Default)]
struct ParsedLp {
    objective: HashMap<String, f64>,
    rows: Vec<(String, HashMap<String, f64>, String, f64)>,
    fixed: HashMap<String, f64>,
    binaries: Vec<String>,
}

/// Minimal LP-format reader for the subset the exporter writes.
fn parse_lp(text: &str) -> ParsedLp {
    let mut parsed = ParsedLp::default();
    let section = |begin: &str, end: &str| -> Vec<&str> {
        text.lines()
            .skip_while(move |l| l.trim() != begin)
            .skip(1)
            .take_while(move |l| l.trim() != end)
            .collect()
    };

    let objective_text = section("Minimize", "Subject To").join(" ");
    let (_, terms) = objective_text.split_once(':').expect("objective label");
    parsed.objective = parse_terms(terms);

    // Rows may wrap over continuation lines; a row is complete once its
    // comparison operator has appeared.
    let mut pending = String::new();
    for line in section("Subject To", "Bounds") {
        pending.push(' ');
        pending.push_str(line.trim());
        let has_op =
            pending.contains("<=") || pending.contains(">=") || pending.contains(" = ");
        if !has_op {
            continue;
        }
        let statement = pending.trim().to_string();
        pending.clear();
        let (name, rest) = statement.split_once(':').expect("row name");
        let op = if rest.contains("<=") {
            "<="
        } else if rest.contains(">=") {
            ">="
        } else {
            "="
        };
        let (lhs, rhs) = rest.rsplit_once(op).expect("row operator");
        parsed.rows.push((
            name.trim().to_string(),
            parse_terms(lhs),
            op.to_string(),
            rhs.trim().parse().expect("row rhs"),
        ));
    }
    assert!(pending.trim().is_empty(), "dangling row text: {pending}");

    for line in section("Bounds", "Binaries") {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() == 3 && parts[1] == "=" {
            parsed
                .fixed
                .insert(parts[0].to_string(), parts[2].parse().expect("bound value"));
        }
    }
    for line in section("Binaries", "End") {
        parsed
            .binaries
            .extend(line.split_whitespace().map(|s| s.to_string()));
    }
    parsed
}

fn parse_terms(text: &str) -> HashMap<String, f64> {
    let mut terms = HashMap::new();
    let mut sign = 1.0f64;
    let mut coefficient: Option<f64> = None;
    for token in text.split_whitespace() {
        match token {
            "+" => {
                sign = 1.0;
                coefficient = None;
            }
            "-" => {
                sign = -1.0;
                coefficient = None;
            }
            _ => {
                if let Ok(value) = token.parse::<f64>() {
                    coefficient = Some(value);
                } else {
                    let coef = sign * coefficient.take().unwrap_or(1.0);
                    *terms.entry(token.to_string()).or_insert(0.0) += coef;
                    sign = 1.0;
                }
            }
        }
    }
    terms
}

#[test]
fn exported_lp_reparses_to_the_same_model() {
    let problem = nine_problem();
    let mut buffer = Vec::new();
    export_lp(&problem, &mut buffer).unwrap();
    let text = String::from_utf8(buffer).unwrap();
    let parsed = parse_lp(&text);

    // Objective terms match the scalarized expression.
    let objective = problem.objective.as_ref().unwrap();
    let mut expected: HashMap<String, f64> = HashMap::new();
    for &(var, coef) in &objective.expr.terms {
        *expected
            .entry(problem.variables[var].name.clone())
            .or_insert(0.0) += coef;
    }
    assert_eq!(parsed.objective.len(), expected.len());
    for (name, coef) in &expected {
        let got = parsed.objective.get(name).unwrap_or(&0.0);
        assert!((got - coef).abs() < 1e-9, "objective {name}: {got} vs {coef}");
    }

    // Every constraint row round-trips with its sense and coefficients.
    assert_eq!(parsed.rows.len(), problem.constraints.len());
    for (con, (name, terms, op, rhs)) in problem.constraints.iter().zip(&parsed.rows) {
        assert_eq!(&con.name, name);
        let want_op = match con.cmp {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        };
        assert_eq!(op, want_op, "row {name}");
        assert!((rhs - con.rhs).abs() < 1e-9, "row {name} rhs");
        assert_eq!(terms.len(), con.terms.len(), "row {name} arity");
        for &(var, coef) in &con.terms {
            let got = terms
                .get(&problem.variables[var].name)
                .unwrap_or(&0.0);
            assert!((got - coef).abs() < 1e-9, "row {name} var {var}");
        }
    }

    // Every variable is declared binary; fixed ones carry their pin.
    assert_eq!(parsed.binaries.len(), problem.variables.len());
    for variable in &problem.variables {
        if variable.is_fixed() {
            assert_eq!(
                parsed.fixed.get(&variable.name),
                Some(&variable.lower),
                "{} pin",
                variable.name
            );
        }
    }

    // Deterministic: a second export is byte-identical.
    let mut again = Vec::new();
    export_lp(&problem, &mut again).unwrap();
    assert_eq!(text.as_bytes(), again.as_slice());
}
