//! Repeated runs of one algorithm over a prepared scenario, and their CSV
//! report.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::run_bestfit;
use crate::exact::{solve_exact, ExactConfig, ExactError};
use crate::heuristic::{run_heuristic, DecisionRecord, PlannerConfig, PlannerError};
use crate::metrics::{compute_metrics, MetricsReport};
use crate::scenario::{PreparedScenario, ScenarioError};
use crate::state::{validate, DeploymentState, FeasibilityReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Heuristic,
    Bestfit,
    Exact,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Heuristic => "heuristic",
            Algorithm::Bestfit => "bestfit",
            Algorithm::Exact => "exact",
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub seed: u64,
    pub metrics: MetricsReport,
    pub report: FeasibilityReport,
    pub decisions: Vec<DecisionRecord>,
    pub state: DeploymentState,
    pub wall_time_ms: f64,
}

impl RunRecord {
    pub fn is_feasible(&self) -> bool {
        self.report.is_feasible()
    }
}

/// Runs `algorithm` once on the workload drawn with `seed`. The planner
/// settings of the scenario can be overridden with `planner`.
pub fn run_once(
    scenario: &PreparedScenario,
    algorithm: Algorithm,
    planner: &PlannerConfig,
    exact: &ExactConfig,
    seed: u64,
) -> Result<RunRecord, ExperimentError> {
    let problem = scenario.problem(seed)?;
    let start = Instant::now();
    let (state, decisions) = match algorithm {
        Algorithm::Heuristic => {
            let out = run_heuristic(&problem, planner)?;
            (out.state, out.decisions)
        }
        Algorithm::Bestfit => {
            let out = run_bestfit(&problem);
            (out.state, out.decisions)
        }
        Algorithm::Exact => {
            let out = solve_exact(&problem, exact)?;
            (out.state, out.decisions)
        }
    };
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(RunRecord {
        seed,
        metrics: compute_metrics(&problem, &state),
        report: validate(&problem, &state),
        decisions,
        state,
        wall_time_ms,
    })
}

/// Runs repetitions `0..reps` with seeds `base_seed + rep`, in parallel,
/// returning records in repetition order.
pub fn run_repetitions(
    scenario: &PreparedScenario,
    algorithm: Algorithm,
    planner: &PlannerConfig,
    exact: &ExactConfig,
    base_seed: u64,
    reps: usize,
) -> Result<Vec<RunRecord>, ExperimentError> {
    (0..reps as u64)
        .into_par_iter()
        .map(|rep| run_once(scenario, algorithm, planner, exact, base_seed + rep))
        .collect()
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Standard error of the mean; needs at least two samples.
fn stderr(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some((var / xs.len() as f64).sqrt())
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes one row per run and a final aggregate row of means with standard
/// errors. Wall times are written only when `timing` is set so that the
/// output is reproducible byte for byte.
pub fn write_csv<W: Write>(
    out: W,
    scenario: &PreparedScenario,
    algorithm: Algorithm,
    records: &[RunRecord],
    timing: bool,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "scenario",
        "algorithm",
        "seed",
        "traffic_multiplier",
        "delay_multiplier",
        "revenue",
        "link_cost",
        "cpu_cost",
        "idle_cost",
        "objective",
        "served_traffic",
        "cost_per_traffic",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(scenario.services.iter().map(|s| format!("frac_{}", s.name)));
    header.extend(["wall_time_ms", "revenue_stderr", "objective_stderr"].map(String::from));
    w.write_record(&header)?;

    let prefix = |seed: String| {
        vec![
            scenario.id.clone(),
            algorithm.name().to_string(),
            seed,
            scenario.multipliers.traffic.to_string(),
            scenario.multipliers.delay.to_string(),
        ]
    };
    let wall = |x: f64| if timing { x.to_string() } else { String::new() };
    for r in records {
        let m = &r.metrics;
        let mut row = prefix(r.seed.to_string());
        row.extend(
            [
                m.revenue,
                m.link_cost,
                m.cpu_cost,
                m.idle_cost,
                m.objective,
                m.served_traffic,
            ]
            .map(|x| x.to_string()),
        );
        row.push(cell(m.cost_per_traffic));
        row.extend(m.admission.iter().map(|f| cell(*f)));
        row.push(wall(r.wall_time_ms));
        row.extend([String::new(), String::new()]);
        w.write_record(&row)?;
    }

    let col = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Vec<f64> {
        records.iter().filter_map(|r| f(&r.metrics)).collect()
    };
    let revenue = col(&|m| Some(m.revenue));
    let objective = col(&|m| Some(m.objective));
    let mut row = prefix("aggregate".into());
    row.push(cell(mean(&revenue)));
    row.push(cell(mean(&col(&|m| Some(m.link_cost)))));
    row.push(cell(mean(&col(&|m| Some(m.cpu_cost)))));
    row.push(cell(mean(&col(&|m| Some(m.idle_cost)))));
    row.push(cell(mean(&objective)));
    row.push(cell(mean(&col(&|m| Some(m.served_traffic)))));
    row.push(cell(mean(&col(&|m| m.cost_per_traffic))));
    for s in 0..scenario.services.len() {
        row.push(cell(mean(&col(&|m| m.admission[s]))));
    }
    let times: Vec<f64> = records.iter().map(|r| r.wall_time_ms).collect();
    row.push(if timing {
        cell(mean(&times))
    } else {
        String::new()
    });
    row.push(cell(stderr(&revenue)));
    row.push(cell(stderr(&objective)));
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}
