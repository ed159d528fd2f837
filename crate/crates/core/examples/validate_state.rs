//! Builds a deployment by hand, checks it against every model constraint,
//! then breaks it in two ways and prints what the validator reports.

use nfv_planner::metrics::compute_metrics;
use nfv_planner::problem::Problem;
use nfv_planner::service::{Endpoint, ServiceSpec, VnfSpec};
use nfv_planner::state::{validate, Deployment, DeploymentState, Instance, Route};
use nfv_planner::topology::{
    build_network, DatacenterDescription, LinkDescription, LogicalLinkId, TopologyDescription,
    VmDescription, VmId,
};
use nfv_planner::units::UnitConstants;
use nfv_planner::workload::{RequestId, ServiceRequest, Workload};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let units = UnitConstants::default();
    let vm = |id: &str, dc: &str| VmDescription {
        id: id.into(),
        datacenter: dc.into(),
        tier: None,
        capacity_mips: 1800.0,
        cpu_cost_per_mips_hour: 6e-5,
        idle_cost_per_hour: 0.054,
        setup_steps: 1,
    };
    let dc = |id: &str| DatacenterDescription {
        id: id.into(),
        gateway: None,
        capacity_mips: None,
    };
    let desc = TopologyDescription {
        switches: vec![],
        datacenters: vec![dc("a"), dc("b")],
        vms: vec![vm("a1", "a"), vm("b1", "b")],
        links: vec![LinkDescription {
            id: None,
            src: "a".into(),
            dst: "b".into(),
            bandwidth_mbps: None,
            delay_ms: 2.0,
            cost_per_gb: 0.01,
            bidirectional: true,
        }],
    };
    let network = build_network(&desc, &units, 3)?;
    let vnf = |name: &str| VnfSpec {
        name: name.into(),
        complexity: 0.1,
        max_instances: 1,
    };
    // 3 pkt/ms through two VNFs within 10 ms.
    let service = ServiceSpec::chain("s", vec![vnf("f"), vnf("g")], 3.0, 10.0, 1.0);
    let workload = Workload {
        requests: vec![ServiceRequest {
            id: RequestId(0),
            service: 0,
            arrival: 1,
            departure: 4,
        }],
        lifespan: 5,
        step_ms: units.step_ms,
    };
    let problem = Problem::new(network, vec![service], workload, units)?;

    let (a, b) = (VmId(0), VmId(1));
    let route = |from, to, link| Route {
        from,
        to,
        link,
        fraction: 1.0,
    };
    // Processing takes 2 ms on a1 and 3 ms on b1, plus 2 ms on the link.
    let deployment = Deployment {
        instances: vec![
            Instance {
                vnf: 0,
                vm: a,
                rate: 3.5,
            },
            Instance {
                vnf: 1,
                vm: b,
                rate: 3.0 + 1.0 / 3.0,
            },
        ],
        routes: vec![
            route(Endpoint::Dummy, Endpoint::Vnf(0), LogicalLinkId::Ingress(a)),
            route(
                Endpoint::Vnf(0),
                Endpoint::Vnf(1),
                LogicalLinkId::Path {
                    src: a,
                    dst: b,
                    index: 0,
                },
            ),
            route(Endpoint::Vnf(1), Endpoint::Dummy, LogicalLinkId::Egress(b)),
        ],
    };
    let mut state = DeploymentState::empty(&problem);
    state.push_segment(RequestId(0), 1..4, deployment);
    // Sets active steps and the setup step before them.
    state.derive_lifecycle(&problem);

    let report = validate(&problem, &state);
    println!("hand-built state feasible: {}", report.is_feasible());
    let m = compute_metrics(&problem, &state);
    println!("revenue {:.2}, total cost {:.4}", m.revenue, m.total_cost());

    // Slower second instance: 1 / (3.1 - 3) = 10 ms on its own.
    let mut slow = state.clone();
    slow.requests[0][0].deployment.instances[1].rate = 3.1;
    // VM b1 switched off while it hosts g.
    let mut dark = state.clone();
    dark.vms[1].active[2] = false;

    for (name, s) in [("slow instance", &slow), ("VM switched off", &dark)] {
        println!("{name}:");
        for v in validate(&problem, s).violations {
            println!("  {:?} at step {:?}: {}", v.constraint, v.step, v.detail);
        }
    }
    Ok(())
}
