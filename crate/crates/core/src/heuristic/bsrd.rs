//! Per-request deployment with backtracking: walks the VNF chain, asking the
//! placement/routing and CPU-assignment steps for each VNF and revisiting the
//! previous VNF when a deployment fails.

use std::collections::HashMap;
use std::ops::Range;

use serde::Serialize;

use super::view::ResourceView;
use crate::problem::Problem;
use crate::service::{cumulative_budgets, Endpoint};
use crate::state::{Deployment, Instance, Route};
use crate::topology::{DcId, LinkId, LogicalLinkId, VmId, VmRef};
use crate::workload::RequestId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Strategy {
    Cheapest,
    Largest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Normal,
    Critical,
}

/// Why a request (or a single VNF deployment attempt) was not deployed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Failure {
    /// Not all traffic of a VNF could be routed to candidate instances.
    Traffic,
    /// No rate assignment meets the delay budget.
    Delay,
    /// Too few usable VMs, or the service is not a chain.
    Structure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedInstance {
    pub vm: VmId,
    /// Incoming traffic, packets/ms.
    pub incoming: f64,
    pub rate: f64,
    /// Worst delay from the ingress until packets leave this instance (ms).
    pub delay_out: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedAmount {
    pub src: VmRef,
    pub dst: VmId,
    pub link: LogicalLinkId,
    pub amount: f64,
}

/// Placement, rates and incoming routes of one VNF.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VnfResult {
    pub instances: Vec<PlacedInstance>,
    pub routes: Vec<RoutedAmount>,
}

/// Satisfied outgoing traffic of an instance of `vnf` on `vm`, kept from a
/// failed placement of the next VNF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheRecord {
    pub vnf: usize,
    pub vm: VmId,
    pub outgoing: f64,
}

/// Knobs separating the full planner from the best-fit baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsrdOptions {
    pub backtracking: bool,
    pub critical_mode: bool,
    pub multi_instance: bool,
    pub largest_strategy: bool,
}

impl BsrdOptions {
    pub const FULL: BsrdOptions = BsrdOptions {
        backtracking: true,
        critical_mode: true,
        multi_instance: true,
        largest_strategy: true,
    };
    pub const BEST_FIT: BsrdOptions = BsrdOptions {
        backtracking: false,
        critical_mode: false,
        multi_instance: false,
        largest_strategy: false,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsrdOutcome {
    pub deployment: Result<Deployment, Failure>,
    /// Iterations of the VNF loop (deployments plus backtracks).
    pub rounds: usize,
    pub backtracks: usize,
    /// Candidate logical links examined by placement calls.
    pub work: u64,
}

/// Unrouted traffic below this share of the edge traffic counts as zero.
pub(crate) const TRAFFIC_TOL: f64 = 1e-9;

/// Working data for deploying one request against a fixed resource view.
pub struct RequestPlanner<'v, 'a> {
    pub(crate) view: &'v ResourceView<'a>,
    pub(crate) problem: &'a Problem,
    pub(crate) service: usize,
    pub(crate) span: Range<usize>,
    pub(crate) usable: Vec<VmId>,
    pub(crate) budgets: Vec<f64>,
    hop_residual: HashMap<LinkId, f64>,
    path_residual: HashMap<(DcId, DcId, u16), f64>,
    pub(crate) work: u64,
}

impl<'v, 'a> RequestPlanner<'v, 'a> {
    pub fn new(
        view: &'v ResourceView<'a>,
        k: RequestId,
        span: Range<usize>,
    ) -> Result<Self, Failure> {
        let problem = view.problem();
        let service = problem.workload.request(k).service;
        let budgets =
            cumulative_budgets(&problem.services[service]).map_err(|_| Failure::Structure)?;
        let usable = problem
            .network
            .vm_ids()
            .filter(|&m| view.usable(m, &span))
            .collect();
        Ok(RequestPlanner {
            view,
            problem,
            service,
            span,
            usable,
            budgets,
            hop_residual: HashMap::new(),
            path_residual: HashMap::new(),
            work: 0,
        })
    }

    pub(crate) fn edge(&self, from: Endpoint, to: Endpoint) -> f64 {
        self.problem.profiles[self.service].edge(from, to)
    }

    fn hop_res(&mut self, h: LinkId) -> f64 {
        if let Some(&r) = self.hop_residual.get(&h) {
            return r;
        }
        let r = self.view.link_residual(h, &self.span);
        self.hop_residual.insert(h, r);
        r
    }

    /// Spare capacity of a logical link given the traffic already routed by
    /// this request (`overlay`, per physical link).
    pub(crate) fn residual(&mut self, l: LogicalLinkId, overlay: &HashMap<LinkId, f64>) -> f64 {
        let LogicalLinkId::Path { src, dst, index } = l else {
            return f64::INFINITY;
        };
        let net = &self.problem.network;
        let (a, b) = (net.vms[src.0].datacenter, net.vms[dst.0].datacenter);
        if a == b {
            return f64::INFINITY;
        }
        if overlay.is_empty() {
            if let Some(&r) = self.path_residual.get(&(a, b, index)) {
                return r;
            }
        }
        let hops = &net.dc_paths(a, b)[index as usize].hops;
        let mut best = f64::INFINITY;
        for &h in hops {
            let r = self.hop_res(h) - overlay.get(&h).copied().unwrap_or(0.0);
            best = best.min(r);
        }
        if overlay.is_empty() {
            self.path_residual.insert((a, b, index), best);
        }
        best
    }
}

/// Adds the traffic of every routed amount in `results` to `overlay`.
pub(crate) fn link_overlay(
    problem: &Problem,
    results: &[Option<VnfResult>],
) -> HashMap<LinkId, f64> {
    let mut overlay = HashMap::new();
    for r in results.iter().flatten() {
        for ra in &r.routes {
            for h in problem.network.hops(ra.link) {
                if problem.network.link(h).bandwidth.is_finite() {
                    *overlay.entry(h).or_insert(0.0) += ra.amount;
                }
            }
        }
    }
    overlay
}

/// Runs the backtracking deployment of request `k` over `span`.
pub fn bsrd(
    view: &ResourceView<'_>,
    k: RequestId,
    span: Range<usize>,
    options: BsrdOptions,
) -> BsrdOutcome {
    let mut planner = match RequestPlanner::new(view, k, span) {
        Ok(p) => p,
        Err(f) => {
            return BsrdOutcome {
                deployment: Err(f),
                rounds: 0,
                backtracks: 0,
                work: 0,
            }
        }
    };
    let problem = planner.problem;
    let svc = &problem.services[planner.service];
    let q_count = svc.vnfs.len();
    let mut results: Vec<Option<VnfResult>> = vec![None; q_count];
    let mut cache: Vec<CacheRecord> = Vec::new();
    let mut status = Status::Normal;
    let mut can_backtrack = false;
    let mut i = 0usize;
    let mut rounds = 0usize;
    let mut backtracks = 0usize;

    let finish = |planner: &RequestPlanner, d: Result<Deployment, Failure>, rounds, backtracks| {
        BsrdOutcome {
            deployment: d,
            rounds,
            backtracks,
            work: planner.work,
        }
    };

    while i < q_count {
        rounds += 1;
        let max_n = if options.multi_instance {
            svc.vnfs[i].max_instances
        } else {
            1
        };
        let mut deployed: Option<VnfResult> = None;
        let mut delay_kept: Option<VnfResult> = None;
        let mut last_failure = Failure::Traffic;
        let mut attempt = |planner: &mut RequestPlanner,
                           cache: &mut Vec<CacheRecord>,
                           results: &[Option<VnfResult>],
                           n: usize,
                           strategy: Strategy,
                           status: Status|
         -> Option<VnfResult> {
            match planner.vptr(i, n, strategy, results, cache) {
                Ok(routes) => {
                    let (res, ok) = planner.ca(i, routes, status, results);
                    if ok {
                        Some(res)
                    } else {
                        last_failure = Failure::Delay;
                        delay_kept = Some(res);
                        None
                    }
                }
                Err(f) => {
                    if delay_kept.is_none() {
                        last_failure = f;
                    }
                    None
                }
            }
        };
        match status {
            Status::Normal => {
                let strategies: &[Strategy] = if options.largest_strategy {
                    &[Strategy::Cheapest, Strategy::Largest]
                } else {
                    &[Strategy::Cheapest]
                };
                'outer: for n in 1..=max_n {
                    for &s in strategies {
                        if let Some(r) = attempt(&mut planner, &mut cache, &results, n, s, status) {
                            deployed = Some(r);
                            break 'outer;
                        }
                    }
                }
            }
            Status::Critical => {
                can_backtrack = false;
                deployed = attempt(
                    &mut planner,
                    &mut cache,
                    &results,
                    max_n,
                    Strategy::Largest,
                    status,
                );
            }
        }

        match deployed {
            Some(r) => {
                if status == Status::Normal {
                    can_backtrack = true;
                }
                results[i] = Some(r);
                status = Status::Normal;
                i += 1;
            }
            None => {
                if !options.critical_mode {
                    return finish(&planner, Err(last_failure), rounds, backtracks);
                }
                status = Status::Critical;
                if can_backtrack && options.backtracking {
                    results[i - 1] = None;
                    i -= 1;
                    backtracks += 1;
                    // The retry of VNF i−1 must use different resources.
                    continue;
                } else if let Some(r) = delay_kept.filter(|_| last_failure == Failure::Delay) {
                    results[i] = Some(r);
                    i += 1;
                } else {
                    return finish(&planner, Err(last_failure), rounds, backtracks);
                }
            }
        }

        // Datacenter capacity and end-to-end delay after each deployment.
        let last = results[i - 1].as_ref().expect("just deployed");
        let worst = last
            .instances
            .iter()
            .map(|x| x.delay_out)
            .fold(0.0, f64::max);
        if !(worst <= svc.target_delay * (1.0 + 1e-12)) {
            return finish(&planner, Err(Failure::Delay), rounds, backtracks);
        }
        if !dc_feasible(&planner, &results) {
            return finish(&planner, Err(Failure::Traffic), rounds, backtracks);
        }
    }

    let deployment = assemble(&planner, &results);
    finish(&planner, Ok(deployment), rounds, backtracks)
}

fn dc_feasible(planner: &RequestPlanner, results: &[Option<VnfResult>]) -> bool {
    let problem = planner.problem;
    let svc = &problem.services[planner.service];
    let mut used: HashMap<DcId, f64> = HashMap::new();
    for (q, r) in results.iter().enumerate() {
        if let Some(r) = r {
            for inst in &r.instances {
                *used
                    .entry(problem.network.vms[inst.vm.0].datacenter)
                    .or_insert(0.0) += inst.rate * svc.vnfs[q].complexity;
            }
        }
    }
    used.into_iter().all(|(d, u)| {
        let cap = planner.view.dc_residual(d, &planner.span);
        u <= cap + crate::state::tolerance(cap)
    })
}

/// Builds the deployment: instances with rates, routes as fractions of edge
/// traffic, and egress routes for every instance of a VNF with egress traffic.
fn assemble(planner: &RequestPlanner, results: &[Option<VnfResult>]) -> Deployment {
    let mut d = Deployment::default();
    for (q, r) in results.iter().enumerate() {
        let r = r.as_ref().expect("complete");
        let from = if q == 0 {
            Endpoint::Dummy
        } else {
            Endpoint::Vnf(q - 1)
        };
        let total = planner.edge(from, Endpoint::Vnf(q));
        for ra in &r.routes {
            d.routes.push(Route {
                from,
                to: Endpoint::Vnf(q),
                link: ra.link,
                fraction: ra.amount / total,
            });
        }
        let p_out = planner.problem.services[planner.service]
            .probability(Endpoint::Vnf(q), Endpoint::Dummy);
        for inst in &r.instances {
            d.instances.push(Instance {
                vnf: q,
                vm: inst.vm,
                rate: inst.rate,
            });
            if p_out > 0.0 {
                let egress_total = planner.edge(Endpoint::Vnf(q), Endpoint::Dummy);
                d.routes.push(Route {
                    from: Endpoint::Vnf(q),
                    to: Endpoint::Dummy,
                    link: LogicalLinkId::Egress(inst.vm),
                    fraction: inst.incoming * p_out / egress_total,
                });
            }
        }
    }
    d
}
