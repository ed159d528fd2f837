//! Revenue and cost accounting over a deployment state.

use serde::Serialize;

use crate::problem::Problem;
use crate::state::DeploymentState;
use crate::workload::RequestId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub revenue: f64,
    pub link_cost: f64,
    pub cpu_cost: f64,
    pub idle_cost: f64,
    pub objective: f64,
    /// Gb carried from the ingress over all served steps.
    pub served_traffic: f64,
    /// Total cost per served Gb; `None` when nothing was served.
    pub cost_per_traffic: Option<f64>,
    /// Per service: admitted over offered requests, `None` when none offered.
    pub admission: Vec<Option<f64>>,
}

impl MetricsReport {
    pub fn total_cost(&self) -> f64 {
        self.link_cost + self.cpu_cost + self.idle_cost
    }
}

pub fn compute_metrics(problem: &Problem, state: &DeploymentState) -> MetricsReport {
    let net = &problem.network;
    let mut revenue = 0.0;
    let mut served_traffic = 0.0;
    let mut link_cost = 0.0;
    let mut cpu_cost = 0.0;
    for (k, segs) in state.requests.iter().enumerate() {
        let req = problem.workload.request(RequestId(k));
        let svc = &problem.services[req.service];
        let profile = &problem.profiles[req.service];
        for seg in segs {
            let steps = seg
                .end
                .min(req.departure)
                .saturating_sub(seg.start.max(req.arrival)) as f64;
            revenue += steps * problem.revenue_per_step(req.service);
            served_traffic += steps * svc.ingress_rate * problem.units.gb_per_traffic_step();
            // Costs accrue on every committed step, inside the lifetime or not.
            let len = (seg.end - seg.start) as f64;
            for inst in &seg.deployment.instances {
                cpu_cost +=
                    len * net.vms[inst.vm.0].cpu_cost * svc.vnfs[inst.vnf].complexity * inst.rate;
            }
            for r in &seg.deployment.routes {
                let amount = r.fraction * profile.edge(r.from, r.to);
                link_cost += len * amount * net.logical_cost(r.link);
            }
        }
    }
    let mut idle_cost = 0.0;
    for (m, sched) in state.vms.iter().enumerate() {
        let on = sched
            .active
            .iter()
            .zip(&sched.turning_on)
            .filter(|(o, u)| **o || **u)
            .count();
        idle_cost += on as f64 * net.vms[m].idle_cost;
    }
    let cost = link_cost + cpu_cost + idle_cost;
    MetricsReport {
        revenue,
        link_cost,
        cpu_cost,
        idle_cost,
        objective: revenue - cost,
        served_traffic,
        cost_per_traffic: (served_traffic > 0.0).then(|| cost / served_traffic),
        admission: admission_fractions(problem, state),
    }
}

pub fn admission_fractions(problem: &Problem, state: &DeploymentState) -> Vec<Option<f64>> {
    let mut offered = vec![0usize; problem.services.len()];
    let mut admitted = vec![0usize; problem.services.len()];
    for r in &problem.workload.requests {
        offered[r.service] += 1;
        if state.is_admitted(r.id) {
            admitted[r.service] += 1;
        }
    }
    offered
        .iter()
        .zip(admitted)
        .map(|(&o, a)| (o > 0).then(|| a as f64 / o as f64))
        .collect()
}
