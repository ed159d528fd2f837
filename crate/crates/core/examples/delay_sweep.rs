//! Admission on the small built-in scenario as link delays grow, for the
//! heuristic and best-fit, averaged over 50 seeds per point.
//!
//!     cargo run --release --example delay_sweep

use nfv_planner::exact::ExactConfig;
use nfv_planner::experiment::{run_repetitions, Algorithm};
use nfv_planner::scenario::builtin_small;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reps = 50;
    println!(
        "{:>5}  {:>17}  {:>17}",
        "delay", "heuristic s1/s2", "bestfit s1/s2"
    );
    for delay in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0] {
        let mut s = builtin_small();
        s.multipliers.delay = delay;
        let scenario = s.prepare()?;
        let mut cols = Vec::new();
        for alg in [Algorithm::Heuristic, Algorithm::Bestfit] {
            let runs = run_repetitions(
                &scenario,
                alg,
                &scenario.planner,
                &ExactConfig::default(),
                0,
                reps,
            )?;
            let frac = |svc: usize| {
                let offered: Vec<f64> = runs
                    .iter()
                    .filter_map(|r| r.metrics.admission[svc])
                    .collect();
                offered.iter().sum::<f64>() / offered.len() as f64
            };
            cols.push(format!("{:.2} / {:.2}", frac(0), frac(1)));
        }
        // Both links are 2 ms before scaling.
        println!("{:>3} ms  {:>17}  {:>17}", 2.0 * delay, cols[0], cols[1]);
    }
    Ok(())
}
