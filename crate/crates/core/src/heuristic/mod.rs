//! Sliding-horizon planner. Every `period` steps the requests alive in the
//! next `horizon` steps are (re)planned one at a time in decreasing revenue
//! order; only the first `period` steps of the plan are committed.

mod bsrd;
mod ca;
mod view;
mod vptr;

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bsrd::{
    bsrd, BsrdOptions, BsrdOutcome, CacheRecord, Failure, PlacedInstance, RoutedAmount, Status,
    Strategy, VnfResult,
};
pub use view::ResourceView;

use crate::problem::Problem;
use crate::state::{step_forward, CommitBatch, Deployment, DeploymentState, FeasibilityReport};
use crate::topology::VmId;
use crate::workload::{horizon_revenue, RequestId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub horizon: usize,
    pub period: usize,
    #[serde(default = "default_k_paths")]
    pub k_paths: usize,
}

fn default_k_paths() -> usize {
    3
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.period == 0 || self.period > self.horizon || self.k_paths == 0 {
            Err(PlannerError::Config(*self))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("invalid planner configuration {0:?}: need 1 <= period <= horizon and k_paths >= 1")]
    Config(PlannerConfig),
    #[error("committed decisions at window {window} violate {} constraint(s)", .report.violations.len())]
    Commit {
        window: usize,
        report: FeasibilityReport,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// Newly planned request.
    Admitted,
    /// Admitted request re-planned in this window.
    Replanned,
    /// Re-planning failed; the request keeps its previous deployment.
    KeptPrior,
    Rejected(Failure),
    /// Request starting after the committed period that could not be planned
    /// yet; it is retried in the next window.
    Deferred(Failure),
    /// Left out of the optimal admission set by the exact solver.
    Declined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionRecord {
    pub window: usize,
    pub request: usize,
    pub decision: Decision,
    pub rounds: usize,
    pub backtracks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PlannerStats {
    pub bsrd_calls: usize,
    pub max_rounds: usize,
    pub backtracks: usize,
    /// Candidate logical links examined over the whole run.
    pub work: u64,
}

impl PlannerStats {
    pub(crate) fn record(&mut self, out: &BsrdOutcome) {
        self.bsrd_calls += 1;
        self.max_rounds = self.max_rounds.max(out.rounds);
        self.backtracks += out.backtracks;
        self.work += out.work;
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub state: DeploymentState,
    pub decisions: Vec<DecisionRecord>,
    pub stats: PlannerStats,
}

fn by_revenue(problem: &Problem, ids: &mut [RequestId], t: usize, h: usize) {
    let key = |k: &RequestId| {
        let r = problem.workload.request(*k);
        horizon_revenue(r, &problem.services[r.service], t, h, &problem.units)
    };
    ids.sort_by(|a, b| {
        key(b)
            .total_cmp(&key(a))
            .then_with(|| {
                problem
                    .workload
                    .request(*a)
                    .arrival
                    .cmp(&problem.workload.request(*b).arrival)
            })
            .then_with(|| a.cmp(b))
    });
}

/// Runs the sliding-horizon planner over the whole lifespan.
pub fn run_heuristic(
    problem: &Problem,
    config: &PlannerConfig,
) -> Result<SimulationOutcome, PlannerError> {
    config.validate()?;
    let steps = problem.steps();
    let mut state = DeploymentState::empty(problem);
    let mut rejected = vec![false; problem.workload.requests.len()];
    let mut decisions = Vec::new();
    let mut stats = PlannerStats::default();
    let mut tentative = BTreeMap::new();
    let mut t = 0;
    while t < steps {
        let end = (t + config.horizon).min(steps);
        let commit_end = (t + config.period).min(steps);
        let plan = plan_window(
            problem,
            &state,
            &tentative,
            Window {
                t,
                end,
                commit_end,
                horizon: config.horizon,
            },
            &mut rejected,
            &mut decisions,
            &mut stats,
        );
        // Requests planned to start after the committed period keep their
        // deployment as a prior for the next window.
        tentative = plan
            .iter()
            .filter(|(_, (span, _))| span.start >= commit_end)
            .map(|(&k, (_, d))| (k, d.clone()))
            .collect();
        let batch = commit_batch(problem, &plan, t, end, commit_end);
        step_forward(problem, &mut state, batch, t..commit_end)
            .map_err(|report| PlannerError::Commit { window: t, report })?;
        t = commit_end;
    }
    Ok(SimulationOutcome {
        state,
        decisions,
        stats,
    })
}

#[derive(Debug, Clone, Copy)]
struct Window {
    t: usize,
    end: usize,
    commit_end: usize,
    horizon: usize,
}

/// Plans one window, returning the planned span and deployment per request.
///
/// Requests holding a deployment (admitted ones, and those planned in the
/// previous window but not yet started) are re-planned first and fall back
/// to that deployment on failure. New requests follow.
fn plan_window(
    problem: &Problem,
    state: &DeploymentState,
    tentative: &BTreeMap<RequestId, Deployment>,
    w: Window,
    rejected: &mut [bool],
    decisions: &mut Vec<DecisionRecord>,
    stats: &mut PlannerStats,
) -> BTreeMap<RequestId, (Range<usize>, Deployment)> {
    let Window {
        t,
        end,
        commit_end,
        horizon,
    } = w;
    let mut view = ResourceView::new(problem, t..end, Some(state));
    let mut plan = BTreeMap::new();
    let mut held: Vec<(RequestId, Deployment)> = Vec::new();
    let mut fresh = Vec::new();
    for r in &problem.workload.requests {
        if r.overlap(t, horizon) == 0 || rejected[r.id.0] {
            continue;
        }
        let committed = state.requests[r.id.0].last().filter(|s| s.end == t);
        if let Some(seg) = committed {
            held.push((r.id, seg.deployment.clone()));
        } else if r.arrival >= t {
            match tentative.get(&r.id) {
                Some(d) => held.push((r.id, d.clone())),
                None => fresh.push(r.id),
            }
        }
    }
    let span_of = |k: RequestId| {
        let r = problem.workload.request(k);
        r.arrival.max(t)..r.departure.min(end)
    };
    let mut record = |k: RequestId, decision, out: &BsrdOutcome| {
        decisions.push(DecisionRecord {
            window: t,
            request: k.0,
            decision,
            rounds: out.rounds,
            backtracks: out.backtracks,
        });
    };
    let fail = |k: RequestId, f: Failure, rejected: &mut [bool]| {
        if problem.workload.request(k).arrival < commit_end {
            rejected[k.0] = true;
            Decision::Rejected(f)
        } else {
            Decision::Deferred(f)
        }
    };

    for (k, prior) in &held {
        view.reserve(*k, span_of(*k), prior);
    }
    let mut order: Vec<RequestId> = held.iter().map(|(k, _)| *k).collect();
    by_revenue(problem, &mut order, t, horizon);
    let mut held: BTreeMap<RequestId, Deployment> = held.into_iter().collect();
    for k in order {
        let span = span_of(k);
        let prior = held.remove(&k).expect("held request");
        view.release(k, span.clone(), &prior);
        let out = bsrd(&view, k, span.clone(), BsrdOptions::FULL);
        stats.record(&out);
        let started = state.is_admitted(k);
        let (chosen, decision) = match out.deployment.clone() {
            Ok(d) if started => (Some(d), Decision::Replanned),
            Ok(d) => (Some(d), Decision::Admitted),
            // An admitted request always keeps its deployment; a planned one
            // only while its VMs can still be ready in time.
            Err(_) if started || prior.vms().all(|m| view.ready(m, span.start)) => {
                (Some(prior), Decision::KeptPrior)
            }
            Err(f) => (None, fail(k, f, rejected)),
        };
        if let Some(d) = chosen {
            view.reserve(k, span.clone(), &d);
            plan.insert(k, (span, d));
        }
        record(k, decision, &out);
    }

    by_revenue(problem, &mut fresh, t, horizon);
    for k in fresh {
        let span = span_of(k);
        let out = bsrd(&view, k, span.clone(), BsrdOptions::FULL);
        stats.record(&out);
        let decision = match out.deployment.clone() {
            Ok(d) => {
                view.reserve(k, span.clone(), &d);
                plan.insert(k, (span, d));
                Decision::Admitted
            }
            Err(f) => fail(k, f, rejected),
        };
        record(k, decision, &out);
    }
    plan
}

/// Committed part of a window plan: segments inside `[t, commit_end)` and the
/// turning-on steps needed by VMs whose planned hosting starts soon.
fn commit_batch(
    problem: &Problem,
    plan: &BTreeMap<RequestId, (Range<usize>, Deployment)>,
    t: usize,
    end: usize,
    commit_end: usize,
) -> CommitBatch {
    let len = end - t;
    let mut hosting: BTreeMap<VmId, Vec<bool>> = BTreeMap::new();
    let mut batch = CommitBatch::default();
    for (&k, (span, d)) in plan {
        let committed = span.start..span.end.min(commit_end);
        if !committed.is_empty() {
            batch.deployments.push((k, committed, d.clone()));
        }
        for m in d.vms() {
            let h = hosting.entry(m).or_insert_with(|| vec![false; len]);
            for x in &mut h[span.start - t..span.end - t] {
                *x = true;
            }
        }
    }
    for (m, host) in hosting {
        let setup = problem.network.vms[m.0].setup_steps;
        for j in t..commit_end {
            if host[j - t] {
                continue;
            }
            // Next planned hosting start after j, if within the setup time.
            let next = (j + 1..end).find(|&s| host[s - t]);
            if next.is_some_and(|s| s - j <= setup) {
                batch.turning_on.push((m, j));
            }
        }
    }
    batch
}
