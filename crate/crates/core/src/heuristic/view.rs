//! Resource bookkeeping over a planning window: VM reservations, per-step
//! datacenter computation and per-step traffic on capacitated links.

use std::collections::HashMap;
use std::ops::Range;

use crate::problem::Problem;
use crate::service::Endpoint;
use crate::state::{Deployment, DeploymentState};
use crate::topology::{DcId, LinkId, VmId};
use crate::workload::RequestId;

#[derive(Debug, Clone)]
pub struct ResourceView<'a> {
    problem: &'a Problem,
    committed: Option<&'a DeploymentState>,
    pub window: Range<usize>,
    vm_busy: Vec<Vec<(Range<usize>, RequestId)>>,
    dc_used: Vec<Vec<f64>>,
    link_used: HashMap<LinkId, Vec<f64>>,
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

impl<'a> ResourceView<'a> {
    /// Empty view over `window`; `committed` supplies VM states for steps
    /// before the window.
    pub fn new(
        problem: &'a Problem,
        window: Range<usize>,
        committed: Option<&'a DeploymentState>,
    ) -> Self {
        let len = window.len();
        ResourceView {
            problem,
            committed,
            vm_busy: vec![Vec::new(); problem.network.vms.len()],
            dc_used: vec![vec![0.0; len]; problem.network.datacenters.len()],
            link_used: HashMap::new(),
            window,
        }
    }

    pub fn problem(&self) -> &'a Problem {
        self.problem
    }

    fn offsets(&self, span: &Range<usize>) -> Range<usize> {
        let s = span.start.max(self.window.start) - self.window.start;
        let e = span
            .end
            .min(self.window.end)
            .saturating_sub(self.window.start);
        s..e.max(s)
    }

    pub fn is_free(&self, m: VmId, span: &Range<usize>) -> bool {
        !self.vm_busy[m.0].iter().any(|(r, _)| overlaps(r, span))
    }

    fn hosting_at(&self, m: VmId, t: usize) -> bool {
        if t < self.window.start {
            self.committed.is_some_and(|c| c.is_active(m, t))
        } else {
            self.vm_busy[m.0].iter().any(|(r, _)| r.contains(&t))
        }
    }

    /// Whether VM `m` can be active from step `s`: it is already hosting at
    /// `s − 1`, or it can spend the preceding setup steps turning on.
    pub fn ready(&self, m: VmId, s: usize) -> bool {
        if s == 0 {
            return false;
        }
        if self.hosting_at(m, s - 1) {
            return true;
        }
        let setup = self.problem.network.vms[m.0].setup_steps;
        if s < setup {
            return false;
        }
        (s - setup..s).all(|j| {
            if j < self.window.start {
                self.committed.is_some_and(|c| c.is_turning_on(m, j))
            } else {
                !self.hosting_at(m, j)
            }
        })
    }

    pub fn usable(&self, m: VmId, span: &Range<usize>) -> bool {
        self.is_free(m, span) && self.ready(m, span.start)
    }

    /// Smallest spare bandwidth of physical link `e` over `span`.
    pub fn link_residual(&self, e: LinkId, span: &Range<usize>) -> f64 {
        let bw = self.problem.network.link(e).bandwidth;
        if bw.is_infinite() {
            return f64::INFINITY;
        }
        let used = self.link_used.get(&e).map_or(0.0, |u| {
            u[self.offsets(span)].iter().copied().fold(0.0, f64::max)
        });
        bw - used
    }

    /// Smallest spare computation of datacenter `d` over `span`.
    pub fn dc_residual(&self, d: DcId, span: &Range<usize>) -> f64 {
        let used = self.dc_used[d.0][self.offsets(span)]
            .iter()
            .copied()
            .fold(0.0, f64::max);
        self.problem.network.datacenters[d.0].capacity - used
    }

    pub fn reserve(&mut self, k: RequestId, span: Range<usize>, d: &Deployment) {
        self.apply(k, span, d, 1.0);
    }

    pub fn release(&mut self, k: RequestId, span: Range<usize>, d: &Deployment) {
        self.apply(k, span, d, -1.0);
    }

    fn apply(&mut self, k: RequestId, span: Range<usize>, d: &Deployment, sign: f64) {
        let p = self.problem;
        let req = p.workload.request(k);
        let svc = &p.services[req.service];
        let off = self.offsets(&span);
        for inst in &d.instances {
            let busy = &mut self.vm_busy[inst.vm.0];
            if sign > 0.0 {
                busy.push((span.clone(), k));
            } else if let Some(pos) = busy.iter().position(|(r, id)| *id == k && *r == span) {
                busy.swap_remove(pos);
            }
            let dc = p.network.vms[inst.vm.0].datacenter;
            for u in &mut self.dc_used[dc.0][off.clone()] {
                *u += sign * inst.rate * svc.vnfs[inst.vnf].complexity;
            }
        }
        let len = self.window.len();
        for r in &d.routes {
            let amount = r.fraction * p.profiles[req.service].edge(r.from, r.to);
            if matches!(r.from, Endpoint::Dummy) || matches!(r.to, Endpoint::Dummy) {
                continue;
            }
            for h in p.network.hops(r.link) {
                if p.network.link(h).bandwidth.is_finite() {
                    let u = self.link_used.entry(h).or_insert_with(|| vec![0.0; len]);
                    for x in &mut u[off.clone()] {
                        *x += sign * amount;
                    }
                }
            }
        }
    }
}
