//! Runs a planner over a scenario for a number of seeded repetitions and
//! writes one CSV row per run plus an aggregate row.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, ValueEnum};
use nfv_planner::exact::ExactConfig;
use nfv_planner::experiment::{run_repetitions, write_csv, Algorithm};
use nfv_planner::scenario::Scenario;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Builtin {
    Small,
    Large,
}

#[derive(Debug, Parser)]
#[command(version, about)]
#[command(group(ArgGroup::new("source").required(true).args(["scenario", "builtin"])))]
struct Args {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    #[arg(long, value_enum, default_value_t = Algorithm::Heuristic)]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Base seed; defaults to the scenario's.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    traffic_mult: Option<f64>,
    #[arg(long)]
    delay_mult: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    period: Option<usize>,
    #[arg(long)]
    k_paths: Option<usize>,
    /// CSV output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print every violation of an infeasible run to standard error and
    /// write no results.
    #[arg(long)]
    validate_strict: bool,
    /// Fill the wall_time_ms column.
    #[arg(long)]
    timing: bool,
    /// Write per-run planner decisions as JSON lines.
    #[arg(long)]
    decisions: Option<PathBuf>,
}

fn load(args: &Args) -> Result<Scenario, String> {
    let mut s = match (&args.scenario, args.builtin) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            Scenario::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        (None, Some(Builtin::Small)) => nfv_planner::scenario::builtin_small(),
        (None, Some(Builtin::Large)) => nfv_planner::scenario::builtin_large(),
        (None, None) => unreachable!("clap enforces a scenario source"),
    };
    if let Some(x) = args.traffic_mult {
        s.multipliers.traffic = x;
    }
    if let Some(x) = args.delay_mult {
        s.multipliers.delay = x;
    }
    if let Some(x) = args.horizon {
        s.planner.horizon = x;
    }
    if let Some(x) = args.period {
        s.planner.period = x;
    }
    if let Some(x) = args.k_paths {
        s.planner.k_paths = x;
    }
    if let Some(x) = args.seed {
        s.seed = x;
    }
    Ok(s)
}

fn run(args: &Args) -> Result<bool, String> {
    let scenario = load(args)?;
    let prepared = scenario.prepare().map_err(|e| e.to_string())?;
    let records = run_repetitions(
        &prepared,
        args.algorithm,
        &prepared.planner,
        &ExactConfig::default(),
        scenario.seed,
        args.reps,
    )
    .map_err(|e| e.to_string())?;

    let mut feasible = true;
    for r in records.iter().filter(|r| !r.is_feasible()) {
        feasible = false;
        eprintln!(
            "seed {}: {} constraint violation(s)",
            r.seed,
            r.report.violations.len()
        );
        if args.validate_strict {
            r.report
                .write_csv(io::stderr())
                .map_err(|e| e.to_string())?;
        }
    }
    if args.validate_strict && !feasible {
        return Ok(false);
    }

    if let Some(path) = &args.decisions {
        let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut w = BufWriter::new(file);
        for r in &records {
            for d in &r.decisions {
                let line = serde_json::json!({ "seed": r.seed, "decision": d });
                writeln!(w, "{line}").map_err(|e| e.to_string())?;
            }
        }
        w.flush().map_err(|e| e.to_string())?;
    }

    let written = match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            write_csv(
                BufWriter::new(file),
                &prepared,
                args.algorithm,
                &records,
                args.timing,
            )
        }
        None => write_csv(
            io::stdout().lock(),
            &prepared,
            args.algorithm,
            &records,
            args.timing,
        ),
    };
    written.map_err(|e| e.to_string())?;
    Ok(feasible)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
