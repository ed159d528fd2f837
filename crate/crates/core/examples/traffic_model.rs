//! Per-VNF arrival rates, edge traffic and delay budgets of a service whose
//! forwarding graph branches and loops back.

use std::collections::BTreeMap;

use nfv_planner::service::{
    delay_budgets, solve_vnf_rates, traffic_profile, validate_service, ServiceSpec, VnfSpec,
};

fn vnf(name: &str, complexity: f64) -> VnfSpec {
    VnfSpec {
        name: name.into(),
        complexity,
        max_instances: 2,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // firewall -> {ids 0.3, nat 0.6}; ids -> firewall 0.5 (re-inspection),
    // ids -> nat 0.5; nat -> egress. The firewall drops 10% of its input.
    let mut s = ServiceSpec::chain(
        "inspect",
        vec![vnf("firewall", 0.2), vnf("ids", 1.5), vnf("nat", 0.1)],
        2.0,
        40.0,
        10.0,
    );
    s.transitions = BTreeMap::from([((0, 1), 0.3), ((0, 2), 0.6), ((1, 0), 0.5), ((1, 2), 0.5)]);
    s.ingress = BTreeMap::from([(0, 1.0)]);
    s.egress = BTreeMap::from([(2, 1.0)]);

    let report = validate_service(&s);
    println!("valid {}  chain {}", report.is_valid(), report.is_chain);

    let rates = solve_vnf_rates(&s)?;
    for (v, r) in s.vnfs.iter().zip(&rates) {
        println!("{:<9} {:.4} pkt/ms", v.name, r);
    }
    let profile = traffic_profile(&s)?;
    for ((from, to), x) in &profile.edge_traffic {
        println!("{from:?} -> {to:?}: {x:.4}");
    }
    println!("scaling factors {:?}", profile.scaling);
    // Budgets split the target delay along a chain, so drop the branches.
    let chain = ServiceSpec::chain("inspect-chain", s.vnfs.clone(), 2.0, 40.0, 10.0);
    println!("chain budgets   {:?}", delay_budgets(&chain)?);
    Ok(())
}
