//! Best-fit online baseline: requests are handled once, at arrival, with a
//! single cheapest instance per VNF, and keep their resources until they
//! depart.

use crate::heuristic::{
    bsrd, BsrdOptions, Decision, DecisionRecord, PlannerStats, ResourceView, SimulationOutcome,
};
use crate::problem::Problem;
use crate::state::DeploymentState;

pub fn run_bestfit(problem: &Problem) -> SimulationOutcome {
    let steps = problem.steps();
    let mut view = ResourceView::new(problem, 0..steps, None);
    let mut state = DeploymentState::empty(problem);
    let mut decisions = Vec::new();
    let mut stats = PlannerStats::default();
    let mut order: Vec<_> = problem.workload.requests.iter().collect();
    order.sort_by_key(|r| (r.arrival, r.id));
    for r in order {
        let span = r.arrival..r.departure;
        let out = bsrd(&view, r.id, span.clone(), BsrdOptions::BEST_FIT);
        stats.record(&out);
        let decision = match out.deployment {
            Ok(d) => {
                view.reserve(r.id, span.clone(), &d);
                state.push_segment(r.id, span, d);
                Decision::Admitted
            }
            Err(f) => Decision::Rejected(f),
        };
        decisions.push(DecisionRecord {
            window: r.arrival,
            request: r.id.0,
            decision,
            rounds: out.rounds,
            backtracks: out.backtracks,
        });
    }
    state.derive_lifecycle(problem);
    SimulationOutcome {
        state,
        decisions,
        stats,
    }
}
