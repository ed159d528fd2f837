//! Clairvoyant optimum for small instances.
//!
//! Time is cut into epochs at arrival and departure events; every admitted
//! request keeps one placement per epoch. The search enumerates admission
//! subsets (depth first, pruned by a revenue bound) and, for each subset,
//! runs a dynamic program over epochs whose state is the set of hosting VMs,
//! so that the one-step turning-on cost of newly used VMs is charged
//! exactly. Placements are injective VNF-to-VM maps with a single logical
//! link per chain edge and minimum-cost rates under the delay target.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::heuristic::{Decision, DecisionRecord};
use crate::problem::Problem;
use crate::service::Endpoint;
use crate::state::{Deployment, DeploymentState, Instance, Route};
use crate::topology::{LogicalLinkId, VmId};
use crate::workload::RequestId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactConfig {
    pub max_vms: usize,
    pub max_requests: usize,
    pub max_vnfs: usize,
    /// Upper bound on per-epoch placement combinations, checked before the
    /// search starts.
    pub max_enumeration: u64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            max_vms: 8,
            max_requests: 24,
            max_vnfs: 4,
            max_enumeration: 10_000_000,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("{what} count {count} exceeds the cap {cap}")]
    Cap {
        what: &'static str,
        count: usize,
        cap: usize,
    },
    #[error("service {0} is not a chain")]
    NotAChain(String),
    #[error("service {0} allows more than one instance per VNF")]
    MultiInstance(String),
    #[error("VM {0} needs more than one setup step")]
    SetupSteps(String),
    #[error("enumeration needs about {0} combinations, above the bound {1}")]
    Enumeration(u64, u64),
}

#[derive(Debug, Error, PartialEq)]
#[error("delay target cannot be met within the VM capacities")]
pub struct RatesInfeasible;

/// Minimum-cost service rates for a chain of single instances.
///
/// Minimises `Σ costs[i] · μ[i]` subject to `Σ 1/(μ[i] − incoming[i]) ≤
/// budget` and `incoming[i] < μ[i] ≤ max_rate[i]`. Writing `x = μ − I`, the
/// unconstrained optimum is `x[i] = Σ_j √a[j] / (B √a[i])`; instances whose
/// rate would exceed their maximum are fixed at it and the rest re-solved on
/// the leftover budget.
pub fn min_cost_rates(
    incoming: &[f64],
    max_rate: &[f64],
    costs: &[f64],
    budget: f64,
) -> Result<Vec<f64>, RatesInfeasible> {
    let n = incoming.len();
    assert!(max_rate.len() == n && costs.len() == n);
    let room: Vec<f64> = (0..n).map(|i| max_rate[i] - incoming[i]).collect();
    if room.iter().any(|&r| !(r > 0.0)) || !(budget > 0.0) {
        return Err(RatesInfeasible);
    }
    // Free instances sit at their maximum.
    let mut clamped: Vec<bool> = costs.iter().map(|&a| a <= 0.0).collect();
    loop {
        let used: f64 = (0..n).filter(|&i| clamped[i]).map(|i| 1.0 / room[i]).sum();
        let left = budget - used;
        let free: Vec<usize> = (0..n).filter(|&i| !clamped[i]).collect();
        if free.is_empty() {
            return if left >= -1e-12 * budget {
                Ok((0..n).map(|i| max_rate[i]).collect())
            } else {
                Err(RatesInfeasible)
            };
        }
        if !(left > 0.0) {
            return Err(RatesInfeasible);
        }
        let sum_sqrt: f64 = free.iter().map(|&i| costs[i].sqrt()).sum();
        let mut x = vec![0.0; n];
        let mut changed = false;
        for i in 0..n {
            if clamped[i] {
                x[i] = room[i];
            } else {
                x[i] = sum_sqrt / (left * costs[i].sqrt());
                if x[i] > room[i] {
                    clamped[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok((0..n).map(|i| incoming[i] + x[i]).collect());
        }
    }
}

/// One placement of a request: VMs per VNF, a logical link per chain edge
/// and the minimum-cost rates.
#[derive(Debug, Clone)]
struct Placement {
    vms: Vec<VmId>,
    links: Vec<LogicalLinkId>,
    rates: Vec<f64>,
    mask: u64,
    /// Cost per step including the idle cost of the hosting VMs.
    cost: f64,
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub state: DeploymentState,
    pub objective: f64,
    pub admitted: Vec<RequestId>,
    pub decisions: Vec<DecisionRecord>,
    /// Admission subsets whose epoch program was solved.
    pub subsets_evaluated: u64,
}

fn check_caps(problem: &Problem, cfg: &ExactConfig) -> Result<(), ExactError> {
    let cap = |what, count, cap| {
        if count > cap {
            Err(ExactError::Cap { what, count, cap })
        } else {
            Ok(())
        }
    };
    cap("VM", problem.network.vms.len(), cfg.max_vms.min(64))?;
    cap("request", problem.workload.requests.len(), cfg.max_requests)?;
    for s in &problem.services {
        cap("VNF", s.vnfs.len(), cfg.max_vnfs)?;
        if !s.is_chain() {
            return Err(ExactError::NotAChain(s.name.clone()));
        }
        if s.vnfs.iter().any(|v| v.max_instances != 1) {
            return Err(ExactError::MultiInstance(s.name.clone()));
        }
    }
    if let Some(vm) = problem.network.vms.iter().find(|v| v.setup_steps != 1) {
        return Err(ExactError::SetupSteps(vm.name.clone()));
    }
    Ok(())
}

/// Every injective VM sequence and link choice meeting the delay target.
fn placements(problem: &Problem, service: usize) -> Vec<Placement> {
    let mut out = Vec::new();
    let mut vms = Vec::new();
    let mut links = Vec::new();

    fn extend(
        problem: &Problem,
        service: usize,
        vms: &mut Vec<VmId>,
        links: &mut Vec<LogicalLinkId>,
        out: &mut Vec<Placement>,
    ) {
        let net = &problem.network;
        let svc = &problem.services[service];
        let q = svc.vnfs.len();
        if vms.len() == q {
            if let Some(p) = finish(problem, service, vms, links) {
                out.push(p);
            }
            return;
        }
        for m in net.vm_ids() {
            if vms.contains(&m) {
                continue;
            }
            match vms.last() {
                None => {
                    vms.push(m);
                    links.push(LogicalLinkId::Ingress(m));
                    extend(problem, service, vms, links, out);
                    links.pop();
                    vms.pop();
                }
                Some(&prev) => {
                    let choices: Vec<_> = net.logical_links_between(prev, m).collect();
                    for l in choices {
                        vms.push(m);
                        links.push(l);
                        extend(problem, service, vms, links, out);
                        links.pop();
                        vms.pop();
                    }
                }
            }
        }
    }

    fn finish(
        problem: &Problem,
        service: usize,
        vms: &[VmId],
        links: &[LogicalLinkId],
    ) -> Option<Placement> {
        let net = &problem.network;
        let svc = &problem.services[service];
        let profile = &problem.profiles[service];
        let incoming = &profile.vnf_rates;
        let last = *vms.last()?;
        let mut links = links.to_vec();
        links.push(LogicalLinkId::Egress(last));
        let network_delay: f64 = links.iter().map(|&l| net.logical_delay(l)).sum();
        let max_rate: Vec<f64> = vms
            .iter()
            .zip(&svc.vnfs)
            .map(|(m, v)| net.vms[m.0].capacity / v.complexity)
            .collect();
        let costs: Vec<f64> = vms
            .iter()
            .zip(&svc.vnfs)
            .map(|(m, v)| net.vms[m.0].cpu_cost * v.complexity)
            .collect();
        let rates = min_cost_rates(
            incoming,
            &max_rate,
            &costs,
            svc.target_delay - network_delay,
        )
        .ok()?;
        let cpu: f64 = rates.iter().zip(&costs).map(|(r, a)| r * a).sum();
        let mut link_cost = 0.0;
        let mut prev = Endpoint::Dummy;
        for (i, &l) in links.iter().enumerate() {
            let to = if i < vms.len() {
                Endpoint::Vnf(i)
            } else {
                Endpoint::Dummy
            };
            link_cost += profile.edge(prev, to) * net.logical_cost(l);
            prev = to;
        }
        let idle: f64 = vms.iter().map(|m| net.vms[m.0].idle_cost).sum();
        Some(Placement {
            vms: vms.to_vec(),
            links,
            rates,
            mask: vms.iter().fold(0, |acc, m| acc | (1u64 << m.0)),
            cost: cpu + link_cost + idle,
        })
    }

    extend(problem, service, &mut vms, &mut links, &mut out);
    out
}

fn deployment(problem: &Problem, service: usize, p: &Placement) -> Deployment {
    let svc = &problem.services[service];
    let q = svc.vnfs.len();
    let instances = p
        .vms
        .iter()
        .zip(&p.rates)
        .enumerate()
        .map(|(i, (&vm, &rate))| Instance { vnf: i, vm, rate })
        .collect();
    let routes = p
        .links
        .iter()
        .enumerate()
        .map(|(i, &link)| Route {
            from: if i == 0 {
                Endpoint::Dummy
            } else {
                Endpoint::Vnf(i - 1)
            },
            to: if i < q {
                Endpoint::Vnf(i)
            } else {
                Endpoint::Dummy
            },
            link,
            fraction: 1.0,
        })
        .collect();
    Deployment { instances, routes }
}

/// A feasible joint choice for the admitted requests alive in one epoch.
#[derive(Debug, Clone)]
struct Combo {
    mask: u64,
    cost: f64,
    choice: Vec<usize>,
}

struct Search<'p> {
    problem: &'p Problem,
    /// Epoch boundaries `[bounds[e], bounds[e+1])`.
    bounds: Vec<usize>,
    /// Requests alive per epoch.
    alive: Vec<Vec<usize>>,
    options: Vec<Vec<Placement>>,
    revenue: Vec<f64>,
    /// Cheapest combination per hosting mask, keyed by epoch and the set of
    /// admitted alive requests.
    cache: HashMap<(usize, u64), Vec<Combo>>,
    evaluated: u64,
}

impl<'p> Search<'p> {
    fn combos(&mut self, e: usize, admitted: u64) -> &[Combo] {
        let members: Vec<usize> = self.alive[e]
            .iter()
            .copied()
            .filter(|&k| admitted >> k & 1 == 1)
            .collect();
        let key = members.iter().fold(0u64, |acc, &k| acc | 1 << k);
        if !self.cache.contains_key(&(e, key)) {
            let list = self.enumerate(&members);
            self.cache.insert((e, key), list);
        }
        &self.cache[&(e, key)]
    }

    fn enumerate(&self, members: &[usize]) -> Vec<Combo> {
        let problem = self.problem;
        let net = &problem.network;
        let mut best: HashMap<u64, Combo> = HashMap::new();
        let mut choice = vec![0usize; members.len()];
        let mut dc_used = vec![0.0; net.datacenters.len()];
        let mut link_used: HashMap<crate::topology::LinkId, f64> = HashMap::new();

        #[allow(clippy::too_many_arguments)]
        fn walk(
            s: &Search,
            members: &[usize],
            depth: usize,
            mask: u64,
            cost: f64,
            choice: &mut Vec<usize>,
            dc_used: &mut Vec<f64>,
            link_used: &mut HashMap<crate::topology::LinkId, f64>,
            best: &mut HashMap<u64, Combo>,
        ) {
            if depth == members.len() {
                let better = best.get(&mask).is_none_or(|c| cost < c.cost);
                if better {
                    best.insert(
                        mask,
                        Combo {
                            mask,
                            cost,
                            choice: choice.clone(),
                        },
                    );
                }
                return;
            }
            let k = members[depth];
            let service = s.problem.workload.requests[k].service;
            let svc = &s.problem.services[service];
            let profile = &s.problem.profiles[service];
            let net = &s.problem.network;
            for (idx, p) in s.options[k].iter().enumerate() {
                if p.mask & mask != 0 {
                    continue;
                }
                let mut ok = true;
                let mut dc_delta = Vec::new();
                for (i, (&m, &r)) in p.vms.iter().zip(&p.rates).enumerate() {
                    let d = net.vms[m.0].datacenter.0;
                    dc_delta.push((d, r * svc.vnfs[i].complexity));
                }
                for &(d, u) in &dc_delta {
                    dc_used[d] += u;
                }
                for &(d, _) in &dc_delta {
                    let cap = net.datacenters[d].capacity;
                    if dc_used[d] > cap + crate::state::tolerance(cap) {
                        ok = false;
                    }
                }
                let mut link_delta = Vec::new();
                let mut prev = Endpoint::Dummy;
                for (i, &l) in p.links.iter().enumerate() {
                    let to = if i < p.vms.len() {
                        Endpoint::Vnf(i)
                    } else {
                        Endpoint::Dummy
                    };
                    if !l.is_dummy() {
                        let amount = profile.edge(prev, to);
                        for h in net.hops(l) {
                            let bw = net.link(h).bandwidth;
                            if bw.is_finite() {
                                link_delta.push((h, amount));
                            }
                        }
                    }
                    prev = to;
                }
                for &(h, a) in &link_delta {
                    *link_used.entry(h).or_insert(0.0) += a;
                }
                for &(h, _) in &link_delta {
                    let bw = net.link(h).bandwidth;
                    if link_used[&h] > bw + crate::state::tolerance(bw) {
                        ok = false;
                    }
                }
                if ok {
                    choice[depth] = idx;
                    walk(
                        s,
                        members,
                        depth + 1,
                        mask | p.mask,
                        cost + p.cost,
                        choice,
                        dc_used,
                        link_used,
                        best,
                    );
                }
                for &(d, u) in &dc_delta {
                    dc_used[d] -= u;
                }
                for &(h, a) in &link_delta {
                    *link_used.get_mut(&h).unwrap() -= a;
                }
            }
        }

        walk(
            self,
            members,
            0,
            0,
            0.0,
            &mut choice,
            &mut dc_used,
            &mut link_used,
            &mut best,
        );
        let mut list: Vec<Combo> = best.into_values().collect();
        list.sort_by_key(|c| c.mask);
        list
    }

    fn feasible(&mut self, admitted: u64, k: usize) -> bool {
        let epochs: Vec<usize> = (0..self.alive.len())
            .filter(|&e| self.alive[e].contains(&k))
            .collect();
        epochs
            .into_iter()
            .all(|e| !self.combos(e, admitted).is_empty())
    }

    /// Minimum total cost over epochs for an admission set, with the chosen
    /// combination per epoch.
    fn program(&mut self, admitted: u64) -> Option<(f64, Vec<Combo>)> {
        self.evaluated += 1;
        let idle: Vec<f64> = self
            .problem
            .network
            .vms
            .iter()
            .map(|v| v.idle_cost)
            .collect();
        let turn_on = |prev: u64, next: u64| -> f64 {
            let mut fresh = next & !prev;
            let mut c = 0.0;
            while fresh != 0 {
                c += idle[fresh.trailing_zeros() as usize];
                fresh &= fresh - 1;
            }
            c
        };
        // (mask, cost, back-pointer into the previous layer, combo)
        let mut layers: Vec<Vec<(u64, f64, usize, Combo)>> = Vec::new();
        let mut prev_layer = vec![(
            0u64,
            0.0,
            usize::MAX,
            Combo {
                mask: 0,
                cost: 0.0,
                choice: Vec::new(),
            },
        )];
        for e in 0..self.alive.len() {
            let len = (self.bounds[e + 1] - self.bounds[e]) as f64;
            let combos = self.combos(e, admitted).to_vec();
            if combos.is_empty() {
                return None;
            }
            let mut layer = Vec::with_capacity(combos.len());
            for c in combos {
                let (arg, total) = prev_layer
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, p.1 + turn_on(p.0, c.mask)))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                    .expect("non-empty layer");
                layer.push((c.mask, total + len * c.cost, arg, c));
            }
            layers.push(std::mem::replace(&mut prev_layer, layer));
        }
        layers.push(prev_layer);
        let last = layers.last().unwrap();
        let (mut idx, best) = last
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
            .map(|(i, x)| (i, x.1))?;
        let mut plan = Vec::with_capacity(self.alive.len());
        for layer in layers.iter().skip(1).rev() {
            let entry = &layer[idx];
            plan.push(entry.3.clone());
            idx = entry.2;
        }
        plan.reverse();
        Some((best, plan))
    }
}

pub fn solve_exact(problem: &Problem, config: &ExactConfig) -> Result<ExactSolution, ExactError> {
    check_caps(problem, config)?;
    let requests = &problem.workload.requests;
    let steps = problem.steps();
    let mut bounds: Vec<usize> = vec![0, steps];
    for r in requests {
        bounds.push(r.arrival.min(steps));
        bounds.push(r.departure.min(steps));
    }
    bounds.sort_unstable();
    bounds.dedup();
    let alive: Vec<Vec<usize>> = bounds
        .windows(2)
        .map(|w| {
            requests
                .iter()
                .filter(|r| r.arrival <= w[0] && w[0] < r.departure)
                .map(|r| r.id.0)
                .collect()
        })
        .collect();
    let mut by_service: HashMap<usize, Vec<Placement>> = HashMap::new();
    let options: Vec<Vec<Placement>> = requests
        .iter()
        .map(|r| {
            // A VM cannot be active at step 0, so such requests are unservable.
            if r.arrival == 0 {
                return Vec::new();
            }
            by_service
                .entry(r.service)
                .or_insert_with(|| placements(problem, r.service))
                .clone()
        })
        .collect();
    let estimate: u64 = alive
        .iter()
        .map(|ks| {
            ks.iter()
                .map(|&k| options[k].len() as u64 + 1)
                .fold(1u64, |a, b| a.saturating_mul(b))
        })
        .fold(0u64, |a, b| a.saturating_add(b));
    if estimate > config.max_enumeration {
        return Err(ExactError::Enumeration(estimate, config.max_enumeration));
    }
    let revenue: Vec<f64> = requests
        .iter()
        .map(|r| r.duration() as f64 * problem.revenue_per_step(r.service))
        .collect();
    let mut search = Search {
        problem,
        bounds: bounds.clone(),
        alive,
        options,
        revenue,
        cache: HashMap::new(),
        evaluated: 0,
    };

    // Higher-revenue requests first tightens the bound early.
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| {
        search.revenue[b]
            .total_cmp(&search.revenue[a])
            .then(a.cmp(&b))
    });
    let mut suffix = vec![0.0; order.len() + 1];
    for i in (0..order.len()).rev() {
        suffix[i] = suffix[i + 1] + search.revenue[order[i]];
    }

    struct Best {
        objective: f64,
        admitted: u64,
        plan: Vec<Combo>,
    }
    fn dfs(
        s: &mut Search,
        order: &[usize],
        suffix: &[f64],
        depth: usize,
        admitted: u64,
        revenue: f64,
        best: &mut Best,
    ) {
        if revenue + suffix[depth] <= best.objective {
            return;
        }
        if depth == order.len() {
            if let Some((cost, plan)) = s.program(admitted) {
                let objective = revenue - cost;
                if objective > best.objective {
                    *best = Best {
                        objective,
                        admitted,
                        plan,
                    };
                }
            }
            return;
        }
        let k = order[depth];
        let with = admitted | 1 << k;
        if !s.options[k].is_empty() && s.feasible(with, k) {
            dfs(
                s,
                order,
                suffix,
                depth + 1,
                with,
                revenue + s.revenue[k],
                best,
            );
        }
        dfs(s, order, suffix, depth + 1, admitted, revenue, best);
    }

    let mut best = Best {
        objective: f64::NEG_INFINITY,
        admitted: 0,
        plan: Vec::new(),
    };
    dfs(&mut search, &order, &suffix, 0, 0, 0.0, &mut best);

    let mut state = DeploymentState::empty(problem);
    for (e, combo) in best.plan.iter().enumerate() {
        let members: Vec<usize> = search.alive[e]
            .iter()
            .copied()
            .filter(|&k| best.admitted >> k & 1 == 1)
            .collect();
        for (&k, &idx) in members.iter().zip(&combo.choice) {
            let service = requests[k].service;
            let d = deployment(problem, service, &search.options[k][idx]);
            state.push_segment(RequestId(k), bounds[e]..bounds[e + 1], d);
        }
    }
    state.derive_lifecycle(problem);
    let admitted: Vec<RequestId> = (0..requests.len())
        .filter(|&k| best.admitted >> k & 1 == 1)
        .map(RequestId)
        .collect();
    let decisions = requests
        .iter()
        .map(|r| DecisionRecord {
            window: r.arrival,
            request: r.id.0,
            decision: if best.admitted >> r.id.0 & 1 == 1 {
                Decision::Admitted
            } else {
                Decision::Declined
            },
            rounds: 0,
            backtracks: 0,
        })
        .collect();
    Ok(ExactSolution {
        state,
        objective: best.objective,
        admitted,
        decisions,
        subsets_evaluated: search.evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spent(x: &[f64], incoming: &[f64]) -> f64 {
        x.iter().zip(incoming).map(|(m, i)| 1.0 / (m - i)).sum()
    }

    #[test]
    fn symmetric_costs_split_budget_evenly() {
        let mu = min_cost_rates(&[0.0, 0.0], &[10.0, 10.0], &[1.0, 1.0], 4.0).unwrap();
        assert_relative_eq!(mu[0], 0.5, max_relative = 1e-12);
        assert_relative_eq!(mu[1], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn unequal_costs() {
        let mu = min_cost_rates(&[0.0, 0.0], &[10.0, 10.0], &[1.0, 4.0], 3.0).unwrap();
        assert_relative_eq!(mu[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(mu[1], 0.5, max_relative = 1e-12);
        assert_relative_eq!(spent(&mu, &[0.0, 0.0]), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn clamped_instance_leaves_budget_to_the_other() {
        // Unclamped: x = [1, 0.5]; capping the first at 0.8 leaves 3 − 1.25
        // for the second.
        let mu = min_cost_rates(&[0.0, 0.0], &[0.8, 10.0], &[1.0, 4.0], 3.0).unwrap();
        assert_relative_eq!(mu[0], 0.8, max_relative = 1e-12);
        assert_relative_eq!(mu[1], 1.0 / 1.75, max_relative = 1e-12);
    }

    #[test]
    fn clamp_beyond_budget_is_infeasible() {
        assert_eq!(
            min_cost_rates(&[0.0, 0.0], &[0.2, 10.0], &[1.0, 1.0], 4.0),
            Err(RatesInfeasible)
        );
    }
}
