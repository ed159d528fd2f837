#![allow(dead_code)]

use nfv_planner::problem::Problem;
use nfv_planner::scenario::{builtin_small, Multipliers, PreparedScenario};
use nfv_planner::service::{Endpoint, ServiceSpec, VnfSpec};
use nfv_planner::state::{Constraint, DeploymentState, Instance};
use nfv_planner::topology::{
    build_network, DatacenterDescription, LinkDescription, LogicalLinkId, PhysicalNetwork,
    TopologyDescription, VmDescription,
};
use nfv_planner::units::UnitConstants;
use nfv_planner::workload::{RequestId, ServiceRequest, Workload};

pub fn dc(id: &str) -> DatacenterDescription {
    DatacenterDescription {
        id: id.into(),
        gateway: None,
        capacity_mips: None,
    }
}

pub fn dc_at(id: &str, gateway: &str) -> DatacenterDescription {
    DatacenterDescription {
        gateway: Some(gateway.into()),
        ..dc(id)
    }
}

/// VM with `mips` capacity (1000 MIPS = 1 unit/ms).
pub fn vm(id: &str, dc: &str, mips: f64, cpu_cost_per_mips_hour: f64) -> VmDescription {
    VmDescription {
        id: id.into(),
        datacenter: dc.into(),
        tier: None,
        capacity_mips: mips,
        cpu_cost_per_mips_hour,
        idle_cost_per_hour: 0.018,
        setup_steps: 1,
    }
}

pub fn link(a: &str, b: &str, delay_ms: f64) -> LinkDescription {
    LinkDescription {
        id: None,
        src: a.into(),
        dst: b.into(),
        bandwidth_mbps: None,
        delay_ms,
        cost_per_gb: 0.01,
        bidirectional: true,
    }
}

pub fn net(desc: &TopologyDescription, k: usize) -> PhysicalNetwork {
    build_network(desc, &UnitConstants::default(), k).unwrap()
}

pub fn vnf(name: &str, complexity: f64, max_instances: usize) -> VnfSpec {
    VnfSpec {
        name: name.into(),
        complexity,
        max_instances,
    }
}

/// Requests given as `(service, arrival, departure)`.
pub fn workload(requests: &[(usize, usize, usize)], lifespan: usize) -> Workload {
    Workload {
        requests: requests
            .iter()
            .enumerate()
            .map(|(i, &(service, arrival, departure))| ServiceRequest {
                id: RequestId(i),
                service,
                arrival,
                departure,
            })
            .collect(),
        lifespan,
        step_ms: UnitConstants::default().step_ms,
    }
}

pub fn problem(
    desc: &TopologyDescription,
    services: Vec<ServiceSpec>,
    requests: &[(usize, usize, usize)],
    lifespan: usize,
) -> Problem {
    Problem::new(
        net(desc, 3),
        services,
        workload(requests, lifespan),
        UnitConstants::default(),
    )
    .unwrap()
}

/// Two single-VM datacenters `a` and `b` (capacity in MIPS) joined by one
/// link of `delay_ms`.
pub fn pair(mips: f64, delay_ms: f64) -> TopologyDescription {
    TopologyDescription {
        switches: vec![],
        datacenters: vec![dc("a"), dc("b")],
        vms: vec![vm("a1", "a", mips, 1e-5), vm("b1", "b", mips, 2e-5)],
        links: vec![link("a", "b", delay_ms)],
    }
}

pub fn small(traffic: f64, delay: f64) -> PreparedScenario {
    let mut s = builtin_small();
    s.multipliers = Multipliers { traffic, delay };
    s.prepare().unwrap()
}

/// Random forwarding graph with up to six VNFs. Every VNF forwards at most
/// 90% of its traffic to other VNFs, sends part of the rest to the egress
/// and drops the remainder. With `acyclic`, VNF `q` only forwards to
/// VNFs with a larger index.
pub fn random_service(rng: &mut impl rand::Rng, acyclic: bool) -> ServiceSpec {
    use std::collections::BTreeMap;
    let n = rng.random_range(1..=6);
    let vnfs = (0..n)
        .map(|i| vnf(&format!("f{i}"), rng.random_range(0.5..3.0), 1))
        .collect();
    let mut s = ServiceSpec::chain("random", vnfs, rng.random_range(0.1..10.0), 50.0, 1.0);
    let mut ingress = BTreeMap::new();
    for q in 0..n {
        if q == 0 || rng.random_bool(0.4) {
            ingress.insert(q, rng.random_range(0.1..1.0));
        }
    }
    let total: f64 = ingress.values().sum();
    ingress.values_mut().for_each(|p| *p /= total);
    s.ingress = ingress;
    s.transitions.clear();
    s.egress.clear();
    for q in 0..n {
        let targets: Vec<usize> = (0..n)
            .filter(|&j| (if acyclic { j > q } else { j != q }) && rng.random_bool(0.6))
            .collect();
        let weights: Vec<f64> = targets.iter().map(|_| rng.random_range(0.1..1.0)).collect();
        let sum: f64 = weights.iter().sum();
        let forward = if targets.is_empty() {
            0.0
        } else {
            rng.random_range(0.0..0.9)
        };
        for (&j, w) in targets.iter().zip(&weights) {
            s.transitions.insert((q, j), forward * w / sum);
        }
        s.egress
            .insert(q, (1.0 - forward) * rng.random_range(0.2..1.0));
    }
    s
}

/// `λ ← λ_ext + Pᵀ λ`, iterated from zero.
pub fn fixed_point(s: &ServiceSpec, rounds: usize) -> Vec<f64> {
    let n = s.vnfs.len();
    let ext: Vec<f64> = (0..n)
        .map(|q| s.ingress_rate * s.probability(Endpoint::Dummy, Endpoint::Vnf(q)))
        .collect();
    let mut x = vec![0.0; n];
    for _ in 0..rounds {
        let mut next = ext.clone();
        for (&(a, b), &p) in &s.transitions {
            next[b] += x[a] * p;
        }
        x = next;
    }
    x
}

pub fn cost(mu: &[f64], c: &[f64]) -> f64 {
    mu.iter().zip(c).map(|(m, c)| m * c).sum()
}

/// Cheapest rates found by splitting the delay budget on a grid of
/// `steps` points per free instance; the last instance takes what is left.
pub fn grid_search(
    incoming: &[f64],
    max_rate: &[f64],
    c: &[f64],
    budget: f64,
    steps: usize,
) -> Option<f64> {
    let n = incoming.len();
    let floor: Vec<f64> = (0..n).map(|i| 1.0 / (max_rate[i] - incoming[i])).collect();
    let mut best: Option<f64> = None;
    let mut delays = vec![0.0; n];
    fn rec(
        i: usize,
        left: f64,
        delays: &mut Vec<f64>,
        floor: &[f64],
        steps: usize,
        budget: f64,
        eval: &mut dyn FnMut(&[f64]),
    ) {
        let n = delays.len();
        if i == n - 1 {
            if left >= floor[i] {
                delays[i] = left;
                eval(delays);
            }
            return;
        }
        let mut points: Vec<f64> = (1..steps)
            .map(|j| budget * j as f64 / steps as f64)
            .collect();
        points.push(floor[i]);
        for d in points {
            if d >= floor[i] && d < left {
                delays[i] = d;
                rec(i + 1, left - d, delays, floor, steps, budget, eval);
            }
        }
    }
    let mut eval = |d: &[f64]| {
        let mu: Vec<f64> = (0..n).map(|i| incoming[i] + 1.0 / d[i]).collect();
        let v = cost(&mu, c);
        best = Some(best.map_or(v, |b: f64| b.min(v)));
    };
    rec(0, budget, &mut delays, &floor, steps, budget, &mut eval);
    best
}

/// Breaks `c` on a valid state. Capacity families lower the capacity in the
/// problem; every other family edits the state.
pub fn break_constraint(c: Constraint, p: &mut Problem, s: &mut DeploymentState, pick: usize) {
    let admitted: Vec<usize> = (0..s.requests.len())
        .filter(|&k| !s.requests[k].is_empty())
        .collect();
    let k = admitted[pick % admitted.len()];
    let t = s.requests[k][0].start;
    let seg = &mut s.requests[k][0];
    let d = &mut seg.deployment;
    let first = d.instances.iter().position(|i| i.vnf == 0).unwrap();
    let second = d.instances.iter().position(|i| i.vnf == 1).unwrap();
    let m = d.instances[first].vm;
    let svc = p.workload.requests[k].service;
    let incoming = p.profiles[svc].vnf_rates[0];
    match c {
        Constraint::Lifetime => seg.start -= 1,
        Constraint::InstanceLimit => {
            let free = p
                .network
                .vm_ids()
                .find(|v| !d.vms().any(|u| u == *v))
                .unwrap();
            let extra = Instance {
                vm: free,
                ..d.instances[first]
            };
            d.instances.push(extra);
        }
        Constraint::ExclusiveHosting => d.instances[second].vm = m,
        Constraint::VmStateExclusive => s.vms[m.0].turning_on[t] = true,
        Constraint::VmSetup => {
            let on = s.vms[m.0].active.iter().position(|&x| x).unwrap();
            s.vms[m.0].turning_on[on - 1] = false;
        }
        Constraint::VmAvailability => s.vms[m.0].active[t] = false,
        Constraint::DcCapacity => {
            let dc = p.network.vms[m.0].datacenter;
            p.network.datacenters[dc.0].capacity = 1e-6;
        }
        Constraint::VmCapacity => p.network.vms[m.0].capacity = 1e-6,
        Constraint::RoutingCompleteness => {
            let r = d
                .routes
                .iter_mut()
                .find(|r| r.from == Endpoint::Dummy)
                .unwrap();
            r.fraction *= 0.5;
        }
        Constraint::PlacementConsistency => {
            let free = p
                .network
                .vm_ids()
                .find(|v| !d.vms().any(|u| u == *v))
                .unwrap();
            let r = d
                .routes
                .iter_mut()
                .find(|r| r.to == Endpoint::Dummy)
                .unwrap();
            r.link = LogicalLinkId::Egress(free);
        }
        Constraint::Stability => d.instances[first].rate = 0.5 * incoming,
        Constraint::FlowConservation => {
            let r = d
                .routes
                .iter_mut()
                .find(|r| r.to == Endpoint::Dummy)
                .unwrap();
            r.fraction *= 0.7;
        }
        Constraint::Latency => d.instances[first].rate = incoming + 1e-3,
        Constraint::LinkCapacity => {
            for l in &mut p.network.links {
                l.bandwidth = 1e-9;
            }
        }
    }
}
