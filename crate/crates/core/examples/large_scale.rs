//! Plans the large built-in scenario (a synthetic 32-datacenter backbone with
//! four services) once with the heuristic and once with best-fit. The traffic
//! multiplier defaults to 1.6, where the backbone starts to saturate.
//!
//!     cargo run --release --example large_scale -- 1.6

use std::time::Instant;

use nfv_planner::baseline::run_bestfit;
use nfv_planner::heuristic::run_heuristic;
use nfv_planner::metrics::compute_metrics;
use nfv_planner::scenario::builtin_large;
use nfv_planner::state::validate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let traffic = std::env::args().nth(1).map_or(Ok(1.6), |a| a.parse())?;
    let mut scenario = builtin_large();
    scenario.multipliers.traffic = traffic;
    let scenario = scenario.prepare()?;
    let problem = scenario.problem(0)?;
    println!(
        "{} VMs, {} requests over {} steps",
        problem.network.vms.len(),
        problem.workload.requests.len(),
        problem.steps()
    );

    let start = Instant::now();
    let out = run_heuristic(&problem, &scenario.planner)?;
    let heuristic_time = start.elapsed();
    let start = Instant::now();
    let base = run_bestfit(&problem);
    let bestfit_time = start.elapsed();

    for (name, state, time) in [
        ("heuristic", &out.state, heuristic_time),
        ("bestfit", &base.state, bestfit_time),
    ] {
        let m = compute_metrics(&problem, state);
        let admitted: Vec<String> = m
            .admission
            .iter()
            .map(|f| f.map_or("-".into(), |f| format!("{f:.2}")))
            .collect();
        println!(
            "{name:<10} objective {:>12.1}  admitted [{}]  {:.2?}  feasible {}",
            m.objective,
            admitted.join(", "),
            time,
            validate(&problem, state).is_feasible()
        );
    }
    println!(
        "heuristic: {} planning calls, {} backtracks, at most {} rounds",
        out.stats.bsrd_calls, out.stats.backtracks, out.stats.max_rounds
    );
    Ok(())
}
