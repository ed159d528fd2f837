//! Placement of one VNF and routing of its incoming traffic: candidate
//! logical links are ranked by strategy, the top `n` destination VMs are
//! picked, and traffic is water-filled across their links.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use super::bsrd::{
    link_overlay, CacheRecord, Failure, RequestPlanner, RoutedAmount, Strategy, VnfResult,
    TRAFFIC_TOL,
};
use crate::service::Endpoint;
use crate::topology::{LinkId, LogicalLinkId, VmId, VmRef};

#[derive(Debug, Clone)]
struct Candidate {
    src: VmRef,
    dst: VmId,
    link: LogicalLinkId,
    key: f64,
}

impl<'v, 'a> RequestPlanner<'v, 'a> {
    /// Places `n` instances of VNF `i` and routes the traffic arriving from
    /// VNF `i − 1` (or the ingress). On a traffic shortfall the satisfied
    /// outgoing traffic of the source instances is stored in `cache`.
    pub(crate) fn vptr(
        &mut self,
        i: usize,
        n: usize,
        strategy: Strategy,
        results: &[Option<VnfResult>],
        cache: &mut Vec<CacheRecord>,
    ) -> Result<Vec<RoutedAmount>, Failure> {
        let problem = self.problem;
        let svc = &problem.services[self.service];
        let q2 = i;
        let omega = svc.vnfs[q2].complexity;
        let from = if i == 0 {
            Endpoint::Dummy
        } else {
            Endpoint::Vnf(i - 1)
        };
        let p12 = svc.probability(from, Endpoint::Vnf(q2));
        let total = self.edge(from, Endpoint::Vnf(q2));
        let tol = TRAFFIC_TOL * total.max(1e-300);
        let mut remaining = total;

        // Remaining outgoing traffic of every source instance towards q2.
        let mut outflow: BTreeMap<VmRef, f64> = BTreeMap::new();
        if i == 0 {
            outflow.insert(VmRef::Dummy, total);
        } else {
            let prev = results[i - 1].as_ref().expect("previous VNF deployed");
            for inst in &prev.instances {
                *outflow.entry(VmRef::Vm(inst.vm)).or_insert(0.0) += inst.incoming * p12;
            }
        }

        let taken: Vec<VmId> = results
            .iter()
            .flatten()
            .flat_map(|r| r.instances.iter().map(|x| x.vm))
            .collect();
        let mut overlay = link_overlay(problem, results);

        // Candidate links: source hosts q1, destination is free.
        let mut candidates: Vec<Candidate> = Vec::new();
        let usable = std::mem::take(&mut self.usable);
        for &src in outflow.keys() {
            for &dst in usable.iter().filter(|m| !taken.contains(m)) {
                let vm = &problem.network.vms[dst.0];
                let cpu = omega * vm.cpu_cost;
                let cap = vm.capacity / omega;
                let links: Vec<LogicalLinkId> = match src {
                    VmRef::Dummy => vec![LogicalLinkId::Ingress(dst)],
                    VmRef::Vm(a) if a == dst => Vec::new(),
                    VmRef::Vm(a) => problem.network.logical_links_between(a, dst).collect(),
                };
                for link in links {
                    self.work += 1;
                    let res = self.residual(link, &overlay);
                    if !(res > 0.0) {
                        continue;
                    }
                    let key = match strategy {
                        Strategy::Cheapest => cpu + problem.network.logical_cost(link),
                        Strategy::Largest => res.min(cap),
                    };
                    candidates.push(Candidate {
                        src,
                        dst,
                        link,
                        key,
                    });
                }
            }
        }
        self.usable = usable;

        let mut routes: Vec<RoutedAmount> = Vec::new();
        let mut spare_cpu: HashMap<VmId, f64> = HashMap::new();
        let mut fill = |planner: &mut Self,
                        c: &Candidate,
                        limit: &mut f64,
                        remaining: &mut f64,
                        outflow: &mut BTreeMap<VmRef, f64>,
                        overlay: &mut HashMap<LinkId, f64>,
                        routes: &mut Vec<RoutedAmount>| {
            let cpu_left = spare_cpu
                .entry(c.dst)
                .or_insert(problem.network.vms[c.dst.0].capacity);
            let cap = planner.residual(c.link, overlay).min(*cpu_left / omega);
            let src_left = outflow[&c.src];
            let r = src_left.min(cap).min(*limit).min(*remaining);
            if r > 0.0 {
                *remaining -= r;
                *limit -= r;
                *cpu_left -= r * omega;
                *outflow.get_mut(&c.src).unwrap() -= r;
                for h in problem.network.hops(c.link) {
                    if problem.network.link(h).bandwidth.is_finite() {
                        *overlay.entry(h).or_insert(0.0) += r;
                    }
                }
                routes.push(RoutedAmount {
                    src: c.src,
                    dst: c.dst,
                    link: c.link,
                    amount: r,
                });
            }
        };

        // Reuse destinations whose outgoing traffic was satisfied before.
        let mut n = n;
        if !cache.is_empty() {
            let alpha = self.problem.profiles[self.service].scaling[q2];
            let records: Vec<CacheRecord> = cache.drain(..).filter(|r| r.vnf == q2).collect();
            for rec in records {
                let mut limit = rec.outgoing / alpha;
                let mut hit = false;
                let mut order: Vec<&Candidate> =
                    candidates.iter().filter(|c| c.dst == rec.vm).collect();
                order.sort_by_key(|c| c.link);
                for c in order {
                    hit = true;
                    fill(
                        self,
                        c,
                        &mut limit,
                        &mut remaining,
                        &mut outflow,
                        &mut overlay,
                        &mut routes,
                    );
                }
                if hit {
                    candidates.retain(|c| c.dst != rec.vm);
                    n = n.saturating_sub(1);
                }
            }
        }

        if n > 0 {
            let cmp = |a: &Candidate, b: &Candidate| -> Ordering {
                let primary = match strategy {
                    Strategy::Cheapest => a.key.total_cmp(&b.key),
                    Strategy::Largest => b.key.total_cmp(&a.key),
                };
                primary.then_with(|| a.link.cmp(&b.link))
            };
            // Best candidate per destination decides the destination ranking.
            let mut best: BTreeMap<VmId, usize> = BTreeMap::new();
            for (idx, c) in candidates.iter().enumerate() {
                best.entry(c.dst)
                    .and_modify(|b| {
                        if cmp(c, &candidates[*b]) == Ordering::Less {
                            *b = idx;
                        }
                    })
                    .or_insert(idx);
            }
            if best.len() < n {
                return Err(Failure::Structure);
            }
            let mut ranked: Vec<usize> = best.into_values().collect();
            if ranked.len() > n {
                ranked.select_nth_unstable_by(n - 1, |a, b| cmp(&candidates[*a], &candidates[*b]));
                ranked.truncate(n);
            }
            let top: Vec<VmId> = ranked.iter().map(|&x| candidates[x].dst).collect();
            let mut l_top: Vec<&Candidate> =
                candidates.iter().filter(|c| top.contains(&c.dst)).collect();
            l_top.sort_by(|a, b| cmp(a, b));

            let cap_sum: f64 = top.iter().map(|m| problem.network.vms[m.0].capacity).sum();
            let mut intake: HashMap<VmId, f64> = top
                .iter()
                .map(|m| (*m, problem.network.vms[m.0].capacity / cap_sum * remaining))
                .collect();
            for c in l_top {
                if remaining <= tol {
                    break;
                }
                let limit = intake.get_mut(&c.dst).unwrap();
                fill(
                    self,
                    c,
                    limit,
                    &mut remaining,
                    &mut outflow,
                    &mut overlay,
                    &mut routes,
                );
            }
        }

        if remaining > tol {
            if i > 0 {
                let alpha = self.problem.profiles[self.service].scaling[i - 1];
                let mut served: BTreeMap<VmId, f64> = BTreeMap::new();
                for r in &routes {
                    if let VmRef::Vm(m) = r.src {
                        *served.entry(m).or_insert(0.0) += r.amount;
                    }
                }
                cache.extend(served.into_iter().map(|(vm, amount)| CacheRecord {
                    vnf: i - 1,
                    vm,
                    outgoing: alpha * amount / p12,
                }));
            }
            return Err(Failure::Traffic);
        }
        Ok(routes)
    }
}
