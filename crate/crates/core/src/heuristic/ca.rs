//! Service-rate assignment for the instances of one VNF: the smallest rate
//! meeting the remaining delay budget, or the VM's maximum rate in critical
//! mode or when no valid smaller rate exists.

use std::collections::BTreeMap;

use super::bsrd::{PlacedInstance, RequestPlanner, RoutedAmount, Status, VnfResult};
use crate::topology::{VmId, VmRef};

impl<'v, 'a> RequestPlanner<'v, 'a> {
    /// Returns the instances with rates and delays, and whether every
    /// instance stays within the cumulative budget of position `i`.
    pub(crate) fn ca(
        &self,
        i: usize,
        routes: Vec<RoutedAmount>,
        status: Status,
        results: &[Option<VnfResult>],
    ) -> (VnfResult, bool) {
        let problem = self.problem;
        let omega = problem.services[self.service].vnfs[i].complexity;
        let budget = self.budgets[i];
        let upstream = |src: VmRef| -> f64 {
            match src {
                VmRef::Dummy => 0.0,
                VmRef::Vm(m) => results[i - 1]
                    .as_ref()
                    .and_then(|r| r.instances.iter().find(|x| x.vm == m))
                    .map_or(0.0, |x| x.delay_out),
            }
        };
        // Per destination VM: incoming traffic and worst arrival delay.
        let mut dst: BTreeMap<VmId, (f64, f64)> = BTreeMap::new();
        for r in &routes {
            let arrival = upstream(r.src) + problem.network.logical_delay(r.link);
            let e = dst.entry(r.dst).or_insert((0.0, 0.0));
            e.0 += r.amount;
            e.1 = e.1.max(arrival);
        }
        let mut instances = Vec::with_capacity(dst.len());
        let mut ok = true;
        for (vm, (incoming, before)) in dst {
            let max_rate = problem.network.vms[vm.0].capacity / omega;
            let rate = match status {
                Status::Critical => max_rate,
                Status::Normal => {
                    let left = budget - before;
                    let mu = incoming + 1.0 / left;
                    if left > 0.0 && mu > incoming && mu <= max_rate {
                        mu
                    } else {
                        max_rate
                    }
                }
            };
            let delay_out = if rate > incoming {
                before + 1.0 / (rate - incoming)
            } else {
                f64::INFINITY
            };
            if !(delay_out <= budget * (1.0 + 1e-12)) {
                ok = false;
            }
            instances.push(PlacedInstance {
                vm,
                incoming,
                rate,
                delay_out,
            });
        }
        (VnfResult { instances, routes }, ok)
    }
}
