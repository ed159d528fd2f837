//! Time-indexed deployment state (VM lifecycles, placements, service rates and
//! routing fractions), the traffic and delay quantities derived from it, and a
//! validator covering every constraint family of the planning model.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::problem::Problem;
use crate::service::Endpoint;
use crate::topology::{LinkId, LogicalLinkId, VmId, VmRef};
use crate::workload::RequestId;

/// Routing fractions at or below this value are treated as unused links.
pub const ROUTE_EPS: f64 = 1e-12;
pub const ABS_TOL: f64 = 1e-9;
pub const REL_TOL: f64 = 1e-6;

/// Allowed slack when comparing `lhs <= rhs`.
pub fn tolerance(rhs: f64) -> f64 {
    ABS_TOL.max(REL_TOL * rhs.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Instance {
    pub vnf: usize,
    pub vm: VmId,
    /// Service rate in packets/ms.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Route {
    pub from: Endpoint,
    pub to: Endpoint,
    pub link: LogicalLinkId,
    /// Share of the edge traffic `Λ(from, to)` carried by `link`.
    pub fraction: f64,
}

/// Placement, rates and routing of one request, held constant over a segment.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Deployment {
    pub instances: Vec<Instance>,
    pub routes: Vec<Route>,
}

impl Deployment {
    pub fn hosts(&self, vnf: usize, vm: VmId) -> bool {
        self.instances.iter().any(|i| i.vnf == vnf && i.vm == vm)
    }

    pub fn vms(&self) -> impl Iterator<Item = VmId> + '_ {
        self.instances.iter().map(|i| i.vm)
    }

    /// Σ rate of entries for `(vnf, vm)`.
    pub fn rate(&self, vnf: usize, vm: VmId) -> f64 {
        self.instances
            .iter()
            .filter(|i| i.vnf == vnf && i.vm == vm)
            .map(|i| i.rate)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub deployment: Deployment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VmSchedule {
    pub active: Vec<bool>,
    pub turning_on: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentState {
    pub steps: usize,
    pub vms: Vec<VmSchedule>,
    /// Served segments per request, sorted by start.
    pub requests: Vec<Vec<Segment>>,
}

impl DeploymentState {
    pub fn new(vm_count: usize, request_count: usize, steps: usize) -> Self {
        DeploymentState {
            steps,
            vms: vec![
                VmSchedule {
                    active: vec![false; steps],
                    turning_on: vec![false; steps],
                };
                vm_count
            ],
            requests: vec![Vec::new(); request_count],
        }
    }

    pub fn empty(problem: &Problem) -> Self {
        Self::new(
            problem.network.vms.len(),
            problem.workload.requests.len(),
            problem.steps(),
        )
    }

    pub fn is_admitted(&self, k: RequestId) -> bool {
        !self.requests[k.0].is_empty()
    }

    pub fn deployment_at(&self, k: RequestId, t: usize) -> Option<&Deployment> {
        self.requests[k.0]
            .iter()
            .find(|s| s.start <= t && t < s.end)
            .map(|s| &s.deployment)
    }

    /// `V(k,t)`
    pub fn is_served(&self, k: RequestId, t: usize) -> bool {
        self.deployment_at(k, t).is_some()
    }

    pub fn served_steps(&self, k: RequestId) -> usize {
        self.requests[k.0].iter().map(|s| s.end - s.start).sum()
    }

    /// Appends a served segment, merging with the previous one when it is
    /// contiguous and identical.
    pub fn push_segment(&mut self, k: RequestId, range: Range<usize>, deployment: Deployment) {
        let segs = &mut self.requests[k.0];
        if let Some(last) = segs.last_mut() {
            if last.end == range.start && last.deployment == deployment {
                last.end = range.end;
                return;
            }
        }
        segs.push(Segment {
            start: range.start,
            end: range.end,
            deployment,
        });
        segs.sort_by_key(|s| s.start);
    }

    /// Requests served at `t` with their deployments.
    pub fn served_at(&self, t: usize) -> impl Iterator<Item = (RequestId, &Deployment)> + '_ {
        self.requests
            .iter()
            .enumerate()
            .filter_map(move |(k, segs)| {
                segs.iter()
                    .find(|s| s.start <= t && t < s.end)
                    .map(|s| (RequestId(k), &s.deployment))
            })
    }

    pub fn is_active(&self, m: VmId, t: usize) -> bool {
        self.vms[m.0].active[t]
    }

    pub fn is_turning_on(&self, m: VmId, t: usize) -> bool {
        self.vms[m.0].turning_on[t]
    }

    /// Sets `O` exactly where VMs host something and `U` for the setup steps
    /// preceding every hosting run. A gap shorter than the setup time keeps
    /// the VM active.
    pub fn derive_lifecycle(&mut self, problem: &Problem) {
        let steps = self.steps;
        let mut hosting = vec![vec![false; steps]; self.vms.len()];
        for segs in &self.requests {
            for s in segs {
                for m in s.deployment.vms() {
                    for h in &mut hosting[m.0][s.start..s.end.min(steps)] {
                        *h = true;
                    }
                }
            }
        }
        for (m, host) in hosting.into_iter().enumerate() {
            let setup = problem.network.vms[m].setup_steps;
            let sched = &mut self.vms[m];
            sched.turning_on.iter_mut().for_each(|u| *u = false);
            sched.active.clone_from(&host);
            let mut last_end: Option<usize> = None;
            let mut t = 0;
            while t < steps {
                if host[t] && (t == 0 || !host[t - 1]) {
                    match last_end {
                        Some(end) if t - end < setup => {
                            for a in &mut sched.active[end..t] {
                                *a = true;
                            }
                        }
                        _ => {
                            for u in &mut sched.turning_on[t.saturating_sub(setup)..t] {
                                *u = true;
                            }
                        }
                    }
                }
                if host[t] && (t + 1 == steps || !host[t + 1]) {
                    last_end = Some(t + 1);
                }
                t += 1;
            }
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("VM {vm} at step {t} is unstable: Σ(μ − I) = {margin}")]
    Unstable { vm: usize, t: usize, margin: f64 },
    #[error("commit rejected with {0} violation(s)")]
    Rejected(usize),
}

// ---------------------------------------------------------------------------
// Traffic quantities

fn edge_traffic(problem: &Problem, k: RequestId, from: Endpoint, to: Endpoint) -> f64 {
    let s = problem.workload.request(k).service;
    problem.profiles[s].edge(from, to)
}

/// `I(k,m,q,t)`: traffic of VNF `q` entering VM `m`.
pub fn incoming_traffic(
    problem: &Problem,
    state: &DeploymentState,
    k: RequestId,
    m: VmId,
    q: usize,
    t: usize,
) -> f64 {
    state
        .deployment_at(k, t)
        .map_or(0.0, |d| deployment_incoming(problem, k, d, m, q))
}

fn deployment_incoming(problem: &Problem, k: RequestId, d: &Deployment, m: VmId, q: usize) -> f64 {
    d.routes
        .iter()
        .filter(|r| r.to == Endpoint::Vnf(q) && r.link.dst() == VmRef::Vm(m))
        .map(|r| r.fraction * edge_traffic(problem, k, r.from, r.to))
        .sum()
}

fn deployment_outgoing(problem: &Problem, k: RequestId, d: &Deployment, m: VmId, q: usize) -> f64 {
    d.routes
        .iter()
        .filter(|r| r.from == Endpoint::Vnf(q) && r.link.src() == VmRef::Vm(m))
        .map(|r| r.fraction * edge_traffic(problem, k, r.from, r.to))
        .sum()
}

/// `D(k,m,q,t)`: traffic of VNF `q` leaving VM `m`.
pub fn outgoing_traffic(
    problem: &Problem,
    state: &DeploymentState,
    k: RequestId,
    m: VmId,
    q: usize,
    t: usize,
) -> f64 {
    state
        .deployment_at(k, t)
        .map_or(0.0, |d| deployment_outgoing(problem, k, d, m, q))
}

/// Σ over hosted `(k, q)` of `μ − I` on VM `m` at `t`.
fn service_margin(problem: &Problem, state: &DeploymentState, m: VmId, t: usize) -> f64 {
    let mut margin = 0.0;
    for (k, d) in state.served_at(t) {
        let mut seen = Vec::new();
        for inst in d.instances.iter().filter(|i| i.vm == m) {
            if seen.contains(&inst.vnf) {
                continue;
            }
            seen.push(inst.vnf);
            margin += d.rate(inst.vnf, m) - deployment_incoming(problem, k, d, m, inst.vnf);
        }
    }
    margin
}

/// `R(m,t) = 1 / Σ(μ − I)`, in ms.
pub fn processing_time(
    problem: &Problem,
    state: &DeploymentState,
    m: VmId,
    t: usize,
) -> Result<f64, StateError> {
    let margin = service_margin(problem, state, m, t);
    if margin > 0.0 {
        Ok(1.0 / margin)
    } else {
        Err(StateError::Unstable { vm: m.0, t, margin })
    }
}

/// Delay of the VNF sequence `w` over the logical links `p` at step `t`:
/// network delay of the links used by consecutive VNF pairs of `w` plus the
/// processing time of the VMs on `p` hosting VNFs of `w`.
pub fn path_delay(
    problem: &Problem,
    state: &DeploymentState,
    k: RequestId,
    w: &[usize],
    p: &[LogicalLinkId],
    t: usize,
) -> f64 {
    let Some(d) = state.deployment_at(k, t) else {
        return 0.0;
    };
    let mut pairs = Vec::with_capacity(w.len() + 1);
    if let (Some(first), Some(last)) = (w.first(), w.last()) {
        pairs.push((Endpoint::Dummy, Endpoint::Vnf(*first)));
        pairs.extend(
            w.windows(2)
                .map(|x| (Endpoint::Vnf(x[0]), Endpoint::Vnf(x[1]))),
        );
        pairs.push((Endpoint::Vnf(*last), Endpoint::Dummy));
    }
    let used = |l: LogicalLinkId, a: Endpoint, b: Endpoint| {
        d.routes
            .iter()
            .any(|r| r.link == l && r.from == a && r.to == b && r.fraction > ROUTE_EPS)
    };
    let mut total = 0.0;
    for &(a, b) in &pairs {
        for &l in p {
            if used(l, a, b) {
                total += problem.network.logical_delay(l);
            }
        }
    }
    let mut vms: Vec<VmId> = p
        .iter()
        .flat_map(|l| [l.src(), l.dst()])
        .filter_map(|v| match v {
            VmRef::Vm(m) => Some(m),
            VmRef::Dummy => None,
        })
        .collect();
    vms.sort_unstable();
    vms.dedup();
    for &q in w {
        for &m in &vms {
            if d.hosts(q, m) {
                total += processing_time(problem, state, m, t).unwrap_or(f64::INFINITY);
            }
        }
    }
    total
}

/// `L(e,t)`: traffic carried by physical link `e` at step `t`.
pub fn link_load(problem: &Problem, state: &DeploymentState, e: LinkId, t: usize) -> f64 {
    let mut load = 0.0;
    for (k, d) in state.served_at(t) {
        for r in &d.routes {
            if problem.network.hops(r.link).any(|h| h == e) {
                load += r.fraction * edge_traffic(problem, k, r.from, r.to);
            }
        }
    }
    load
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Constraint {
    Lifetime,
    InstanceLimit,
    ExclusiveHosting,
    VmStateExclusive,
    VmSetup,
    VmAvailability,
    DcCapacity,
    VmCapacity,
    RoutingCompleteness,
    PlacementConsistency,
    Stability,
    FlowConservation,
    Latency,
    LinkCapacity,
}

impl Constraint {
    pub const ALL: [Constraint; 14] = [
        Constraint::Lifetime,
        Constraint::InstanceLimit,
        Constraint::ExclusiveHosting,
        Constraint::VmStateExclusive,
        Constraint::VmSetup,
        Constraint::VmAvailability,
        Constraint::DcCapacity,
        Constraint::VmCapacity,
        Constraint::RoutingCompleteness,
        Constraint::PlacementConsistency,
        Constraint::Stability,
        Constraint::FlowConservation,
        Constraint::Latency,
        Constraint::LinkCapacity,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub step: Option<usize>,
    pub request: Option<usize>,
    pub detail: String,
    /// `rhs − lhs` of the violated inequality (negative), or the absolute
    /// mismatch for equalities.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, c: Constraint) -> usize {
        self.violations.iter().filter(|v| v.constraint == c).count()
    }

    pub fn has(&self, c: Constraint) -> bool {
        self.count(c) > 0
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for v in &self.violations {
            out.serialize(v)?;
        }
        out.flush()?;
        Ok(())
    }
}

struct Sink {
    out: Vec<Violation>,
}

impl Sink {
    fn push(
        &mut self,
        constraint: Constraint,
        step: Option<usize>,
        request: Option<RequestId>,
        slack: f64,
        detail: String,
    ) {
        self.out.push(Violation {
            constraint,
            step,
            request: request.map(|k| k.0),
            detail,
            slack,
        });
    }

    /// Records a violation when `lhs > rhs` beyond tolerance.
    fn leq(
        &mut self,
        c: Constraint,
        t: Option<usize>,
        k: Option<RequestId>,
        lhs: f64,
        rhs: f64,
        detail: impl FnOnce() -> String,
    ) {
        if !(lhs <= rhs + tolerance(rhs)) {
            self.push(c, t, k, rhs - lhs, detail());
        }
    }
}

/// Checks every constraint family over the whole horizon.
pub fn validate(problem: &Problem, state: &DeploymentState) -> FeasibilityReport {
    validate_range(problem, state, 0..state.steps, true)
}

/// Checks per-step families on `range`. With `complete`, admission
/// continuity is required over the full request lifetimes; otherwise only
/// segments outside lifetimes or overlapping each other are reported.
pub fn validate_range(
    problem: &Problem,
    state: &DeploymentState,
    range: Range<usize>,
    complete: bool,
) -> FeasibilityReport {
    let mut sink = Sink { out: Vec::new() };
    check_lifetimes(problem, state, complete, &mut sink);
    for t in range.start..range.end.min(state.steps) {
        check_vm_states(problem, state, t, &mut sink);
        check_step(problem, state, t, &mut sink);
    }
    FeasibilityReport {
        violations: sink.out,
    }
}

fn check_lifetimes(problem: &Problem, state: &DeploymentState, complete: bool, sink: &mut Sink) {
    for (k, segs) in state.requests.iter().enumerate() {
        let req = &problem.workload.requests[k];
        let id = Some(RequestId(k));
        let mut cursor: Option<usize> = None;
        for s in segs {
            if s.start >= s.end || s.start < req.arrival || s.end > req.departure {
                sink.push(
                    Constraint::Lifetime,
                    Some(s.start),
                    id,
                    -1.0,
                    format!(
                        "served over [{}, {}) outside lifetime [{}, {})",
                        s.start, s.end, req.arrival, req.departure
                    ),
                );
            }
            if let Some(c) = cursor {
                if s.start < c {
                    sink.push(
                        Constraint::Lifetime,
                        Some(s.start),
                        id,
                        -1.0,
                        "overlapping segments".into(),
                    );
                } else if s.start > c {
                    sink.push(
                        Constraint::Lifetime,
                        Some(c),
                        id,
                        -((s.start - c) as f64),
                        format!("service interrupted over [{c}, {})", s.start),
                    );
                }
            }
            cursor = Some(cursor.map_or(s.end, |c: usize| c.max(s.end)));
        }
        if complete && !segs.is_empty() {
            let first = segs[0].start;
            let last = cursor.unwrap_or(first);
            if first > req.arrival || last < req.departure {
                sink.push(
                    Constraint::Lifetime,
                    None,
                    id,
                    -1.0,
                    format!(
                        "admitted but served only over [{first}, {last}) of [{}, {})",
                        req.arrival, req.departure
                    ),
                );
            }
        }
    }
}

fn check_vm_states(problem: &Problem, state: &DeploymentState, t: usize, sink: &mut Sink) {
    for (m, sched) in state.vms.iter().enumerate() {
        let (o, u) = (sched.active[t], sched.turning_on[t]);
        if o && u {
            sink.push(
                Constraint::VmStateExclusive,
                Some(t),
                None,
                -1.0,
                format!("VM {m} both active and turning on"),
            );
        }
        if o && !(t > 0 && sched.active[t - 1]) {
            let setup = problem.network.vms[m].setup_steps;
            let ready = t >= setup && sched.turning_on[t - setup..t].iter().all(|&x| x);
            if !ready {
                sink.push(
                    Constraint::VmSetup,
                    Some(t),
                    None,
                    -1.0,
                    format!("VM {m} active without {setup} turning-on step(s)"),
                );
            }
        }
    }
}

fn check_step(problem: &Problem, state: &DeploymentState, t: usize, sink: &mut Sink) {
    let net = &problem.network;
    let served: Vec<(RequestId, &Deployment)> = state.served_at(t).collect();

    // Placement and rates per VM.
    let mut hosted: Vec<Vec<(RequestId, usize)>> = vec![Vec::new(); net.vms.len()];
    let mut dc_load = vec![0.0; net.datacenters.len()];
    let mut link_loads: HashMap<LinkId, f64> = HashMap::new();
    let mut margins: HashMap<VmId, f64> = HashMap::new();

    for &(k, d) in &served {
        let req = problem.workload.request(k);
        let svc = &problem.services[req.service];
        let id = Some(k);
        let mut placed: BTreeMap<(usize, VmId), f64> = BTreeMap::new();
        for inst in &d.instances {
            if inst.vnf >= svc.vnfs.len() || inst.vm.0 >= net.vms.len() {
                sink.push(
                    Constraint::PlacementConsistency,
                    Some(t),
                    id,
                    -1.0,
                    format!("instance {inst:?} references unknown VNF or VM"),
                );
                continue;
            }
            *placed.entry((inst.vnf, inst.vm)).or_insert(0.0) += inst.rate;
        }
        for (q, vnf) in svc.vnfs.iter().enumerate() {
            let n = placed.keys().filter(|(x, _)| *x == q).count();
            sink.leq(
                Constraint::InstanceLimit,
                Some(t),
                id,
                n as f64,
                vnf.max_instances as f64,
                || format!("VNF {q} has {n} instances, limit {}", vnf.max_instances),
            );
        }
        for (&(q, m), &rate) in &placed {
            hosted[m.0].push((k, q));
            let vm = &net.vms[m.0];
            let work = rate * svc.vnfs[q].complexity;
            if rate < 0.0 {
                sink.push(
                    Constraint::VmCapacity,
                    Some(t),
                    id,
                    rate,
                    format!("negative rate on VM {}", m.0),
                );
            }
            sink.leq(
                Constraint::VmCapacity,
                Some(t),
                id,
                work,
                vm.capacity,
                || format!("VNF {q} on VM {} uses {work} of {}", m.0, vm.capacity),
            );
            dc_load[vm.datacenter.0] += work;

            let inc = deployment_incoming(problem, k, d, m, q);
            let out = deployment_outgoing(problem, k, d, m, q);
            *margins.entry(m).or_insert(0.0) += rate - inc;
            sink.leq(Constraint::Stability, Some(t), id, inc, rate, || {
                format!("VNF {q} on VM {}: incoming {inc} above rate {rate}", m.0)
            });
            let expected = problem.profiles[req.service].scaling[q] * inc;
            if (out - expected).abs() > tolerance(expected) {
                sink.push(
                    Constraint::FlowConservation,
                    Some(t),
                    id,
                    -(out - expected).abs(),
                    format!("VNF {q} on VM {}: outgoing {out}, expected {expected}", m.0),
                );
            }
        }

        // Routing completeness per edge.
        let mut sums: BTreeMap<(Endpoint, Endpoint), f64> = BTreeMap::new();
        for r in &d.routes {
            if r.fraction < 0.0 || !r.fraction.is_finite() {
                sink.push(
                    Constraint::RoutingCompleteness,
                    Some(t),
                    id,
                    r.fraction,
                    format!("invalid fraction {} on {:?}", r.fraction, r.link),
                );
            }
            *sums.entry((r.from, r.to)).or_insert(0.0) += r.fraction;
        }
        for (from, to, _) in svc.edges() {
            let total = sums.remove(&(from, to)).unwrap_or(0.0);
            if total < 1.0 - tolerance(1.0) {
                sink.push(
                    Constraint::RoutingCompleteness,
                    Some(t),
                    id,
                    total - 1.0,
                    format!("edge {from:?}->{to:?} routed {total}"),
                );
            }
            sink.leq(
                Constraint::RoutingCompleteness,
                Some(t),
                id,
                total,
                1.0,
                || format!("edge {from:?}->{to:?} over-routed {total}"),
            );
        }
        for ((from, to), total) in sums {
            if total > ROUTE_EPS {
                sink.push(
                    Constraint::RoutingCompleteness,
                    Some(t),
                    id,
                    -total,
                    format!("routes on edge {from:?}->{to:?} that carries no traffic"),
                );
            }
        }

        // Placement consistency of every used route.
        for r in d.routes.iter().filter(|r| r.fraction > ROUTE_EPS) {
            if !net.contains_logical_link(r.link) {
                sink.push(
                    Constraint::PlacementConsistency,
                    Some(t),
                    id,
                    -1.0,
                    format!("unknown logical link {:?}", r.link),
                );
                continue;
            }
            let end_ok = |ep: Endpoint, vm: VmRef| match (ep, vm) {
                (Endpoint::Dummy, VmRef::Dummy) => true,
                (Endpoint::Vnf(q), VmRef::Vm(m)) => placed.contains_key(&(q, m)),
                _ => false,
            };
            if !end_ok(r.from, r.link.src()) || !end_ok(r.to, r.link.dst()) {
                sink.push(
                    Constraint::PlacementConsistency,
                    Some(t),
                    id,
                    -r.fraction,
                    format!(
                        "route {:?}->{:?} on {:?} does not match placement",
                        r.from, r.to, r.link
                    ),
                );
            }
            let amount = r.fraction * edge_traffic(problem, k, r.from, r.to);
            for h in net.hops(r.link) {
                *link_loads.entry(h).or_insert(0.0) += amount;
            }
        }
    }

    for (m, list) in hosted.iter().enumerate() {
        if list.len() > 1 {
            sink.push(
                Constraint::ExclusiveHosting,
                Some(t),
                None,
                1.0 - list.len() as f64,
                format!("VM {m} hosts {list:?}"),
            );
        }
        if !list.is_empty() && !state.vms[m].active[t] {
            sink.push(
                Constraint::VmAvailability,
                Some(t),
                None,
                -1.0,
                format!("VM {m} hosts VNFs while not active"),
            );
        }
    }
    for (dc, &load) in dc_load.iter().enumerate() {
        let cap = net.datacenters[dc].capacity;
        sink.leq(Constraint::DcCapacity, Some(t), None, load, cap, || {
            format!("datacenter {dc} uses {load} of {cap}")
        });
    }
    let mut loads: Vec<_> = link_loads.into_iter().collect();
    loads.sort_by_key(|(e, _)| *e);
    for (e, load) in loads {
        let bw = net.link(e).bandwidth;
        if bw.is_finite() {
            sink.leq(Constraint::LinkCapacity, Some(t), None, load, bw, || {
                format!("link {} carries {load} of {bw}", e.0)
            });
        }
    }

    // End-to-end latency: longest F-consistent path through the instances.
    for &(k, d) in &served {
        let req = problem.workload.request(k);
        let target = problem.services[req.service].target_delay;
        let proc = |m: VmId| match margins.get(&m) {
            Some(&x) if x > 0.0 => 1.0 / x,
            _ => f64::INFINITY,
        };
        match longest_delay(problem, d, &proc) {
            Some(delay) => sink.leq(Constraint::Latency, Some(t), Some(k), delay, target, || {
                format!("end-to-end delay {delay} ms above target {target} ms")
            }),
            None => sink.push(
                Constraint::Latency,
                Some(t),
                Some(k),
                f64::NEG_INFINITY,
                "routing contains a cycle".into(),
            ),
        }
    }
}

/// Largest ingress-to-egress delay over used routes; `None` when the used
/// routes form a cycle.
pub fn worst_delay(
    problem: &Problem,
    state: &DeploymentState,
    d: &Deployment,
    t: usize,
) -> Option<f64> {
    longest_delay(problem, d, &|m| {
        processing_time(problem, state, m, t).unwrap_or(f64::INFINITY)
    })
}

/// Longest path through the used routes of `d`, given per-VM processing
/// times.
pub fn longest_delay(problem: &Problem, d: &Deployment, proc: &dyn Fn(VmId) -> f64) -> Option<f64> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Visiting,
        Done(f64),
    }
    fn departure(
        problem: &Problem,
        d: &Deployment,
        proc: &dyn Fn(VmId) -> f64,
        node: (usize, VmId),
        memo: &mut HashMap<(usize, VmId), Mark>,
    ) -> Option<f64> {
        match memo.get(&node) {
            Some(Mark::Done(v)) => return Some(*v),
            Some(Mark::Visiting) => return None,
            None => {}
        }
        memo.insert(node, Mark::Visiting);
        let mut arrival: f64 = 0.0;
        for r in d.routes.iter().filter(|r| {
            r.fraction > ROUTE_EPS
                && r.to == Endpoint::Vnf(node.0)
                && r.link.dst() == VmRef::Vm(node.1)
        }) {
            let before = match (r.from, r.link.src()) {
                (Endpoint::Vnf(q), VmRef::Vm(m)) => departure(problem, d, proc, (q, m), memo)?,
                _ => 0.0,
            };
            arrival = arrival.max(before + problem.network.logical_delay(r.link));
        }
        let v = arrival + proc(node.1);
        memo.insert(node, Mark::Done(v));
        Some(v)
    }
    let mut memo = HashMap::new();
    let mut worst: f64 = 0.0;
    for r in d
        .routes
        .iter()
        .filter(|r| r.fraction > ROUTE_EPS && r.to == Endpoint::Dummy)
    {
        if let (Endpoint::Vnf(q), VmRef::Vm(m)) = (r.from, r.link.src()) {
            worst = worst.max(departure(problem, d, proc, (q, m), &mut memo)?);
        }
    }
    // Cycles not reachable from an egress route still break the latency check.
    for inst in &d.instances {
        departure(problem, d, proc, (inst.vnf, inst.vm), &mut memo)?;
    }
    Some(worst)
}

// ---------------------------------------------------------------------------
// Commit

/// Decisions for one committed period: served segments and the VMs to put
/// in turning-on state at given steps.
#[derive(Debug, Clone, Default)]
pub struct CommitBatch {
    pub deployments: Vec<(RequestId, Range<usize>, Deployment)>,
    pub turning_on: Vec<(VmId, usize)>,
}

/// Applies `batch` on `range`: records the segments, marks hosting VMs
/// active and the listed VMs turning on, then validates the range. The state
/// is left untouched when the batch is infeasible.
pub fn step_forward(
    problem: &Problem,
    state: &mut DeploymentState,
    batch: CommitBatch,
    range: Range<usize>,
) -> Result<(), FeasibilityReport> {
    let backup = state.clone();
    for (k, r, d) in batch.deployments {
        state.push_segment(k, r, d);
    }
    for t in range.clone() {
        for sched in &mut state.vms {
            sched.active[t] = false;
        }
        let hosting: Vec<VmId> = state
            .served_at(t)
            .flat_map(|(_, d)| d.vms().collect::<Vec<_>>())
            .collect();
        for m in hosting {
            state.vms[m.0].active[t] = true;
        }
    }
    for (m, t) in batch.turning_on {
        state.vms[m.0].turning_on[t] = true;
    }
    let report = validate_range(problem, state, range, false);
    if report.is_feasible() {
        Ok(())
    } else {
        *state = backup;
        Err(report)
    }
}
