//! Runs the heuristic, the best-fit baseline and the exact solver on the small
//! built-in scenario and prints their metrics side by side.
//!
//!     cargo run --example small_scale

use nfv_planner::exact::ExactConfig;
use nfv_planner::experiment::{run_repetitions, Algorithm};
use nfv_planner::scenario::builtin_small;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = builtin_small().prepare()?;
    let reps = 20;
    println!(
        "{:<10} {:>10} {:>10} {:>8} {:>8}",
        "algorithm", "revenue", "objective", "s1", "s2"
    );
    for alg in [Algorithm::Heuristic, Algorithm::Bestfit, Algorithm::Exact] {
        let runs = run_repetitions(
            &scenario,
            alg,
            &scenario.planner,
            &ExactConfig::default(),
            0,
            reps,
        )?;
        assert!(runs.iter().all(|r| r.is_feasible()));
        let mean =
            |f: &dyn Fn(usize) -> f64| (0..runs.len()).map(f).sum::<f64>() / runs.len() as f64;
        let frac = |s: usize| {
            let offered: Vec<f64> = runs.iter().filter_map(|r| r.metrics.admission[s]).collect();
            offered.iter().sum::<f64>() / offered.len() as f64
        };
        println!(
            "{:<10} {:>10.2} {:>10.2} {:>8.2} {:>8.2}",
            alg.name(),
            mean(&|i| runs[i].metrics.revenue),
            mean(&|i| runs[i].metrics.objective),
            frac(0),
            frac(1),
        );
    }
    Ok(())
}
