use wams::objectives::ObjectiveKind;
use wams::pareto::{Backend, Planner};
use wams::solver::SolveLimits;
use std::time::Instant;

fn main() {
    let case = wams::case::builtin("ieee9").unwrap();
    let planner = Planner::from_case(&case).unwrap();
    let limits = SolveLimits { max_nodes: 1_000_000, time_limit: Some(std::time::Duration::from_secs(600)) };
    let t = Instant::now();
    let f = planner.epsilon_scan(&ObjectiveKind::ALL, 32, &limits, &Backend::Embedded).unwrap();
    println!("eps3 res 32: {:?}, {} points, {} solves, capped {}", t.elapsed(), f.points.len(), f.report.solves, f.report.capped_solves);
    for p in &f.points {
        println!("  {:>12} {:.6e} {:>12.3}  [{}]", p.objectives.cost.to_string(), p.objectives.unreliability, p.objectives.traffic, p.provenance);
    }
}
