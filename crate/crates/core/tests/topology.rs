mod common;

use common::*;
use nfv_planner::scenario::builtin_large;
use nfv_planner::service::{Endpoint, ServiceSpec};
use nfv_planner::state::{link_load, Deployment, DeploymentState, Route};
use nfv_planner::topology::{LinkId, LogicalLinkId, PhysicalNetwork, TopologyDescription, VmId};
use nfv_planner::workload::RequestId;

fn diamond() -> TopologyDescription {
    TopologyDescription {
        switches: ["A", "B", "C", "D"].map(String::from).to_vec(),
        datacenters: vec![dc_at("x", "A"), dc_at("y", "D")],
        vms: vec![vm("x1", "x", 1000.0, 1e-5), vm("y1", "y", 1000.0, 1e-5)],
        links: vec![
            link("A", "B", 1.0),
            link("B", "D", 2.0),
            link("A", "C", 2.0),
            link("C", "D", 3.0),
        ],
    }
}

fn delays(net: &PhysicalNetwork, a: VmId, b: VmId) -> Vec<f64> {
    net.logical_links_between(a, b)
        .map(|l| net.logical_delay(l))
        .collect()
}

#[test]
fn diamond_paths_in_delay_order() {
    let desc = diamond();
    assert_eq!(delays(&net(&desc, 2), VmId(0), VmId(1)), vec![3.0, 5.0]);
    assert_eq!(delays(&net(&desc, 2), VmId(1), VmId(0)), vec![3.0, 5.0]);
    assert_eq!(delays(&net(&desc, 1), VmId(0), VmId(1)), vec![3.0]);
    // only two loop-free paths exist
    assert_eq!(delays(&net(&desc, 5), VmId(0), VmId(1)), vec![3.0, 5.0]);
}

#[test]
fn same_datacenter_link_is_ideal() {
    let mut desc = diamond();
    desc.vms.push(vm("x2", "x", 1000.0, 1e-5));
    let n = net(&desc, 3);
    let l: Vec<_> = n.logical_links_between(VmId(0), VmId(2)).collect();
    assert_eq!(l.len(), 1);
    assert_eq!(n.logical_delay(l[0]), 0.0);
    assert_eq!(n.logical_cost(l[0]), 0.0);
    assert!(n.hops(l[0]).all(|h| n.link(h).bandwidth.is_infinite()));
}

#[test]
fn unknown_link_endpoint_is_an_error() {
    let mut desc = diamond();
    desc.links.push(link("A", "Z", 1.0));
    assert!(nfv_planner::topology::build_network(&desc, &Default::default(), 3).is_err());
}

fn check_hop_sums(n: &PhysicalNetwork) {
    for a in n.vm_ids() {
        for b in n.vm_ids() {
            for l in n.logical_links_between(a, b) {
                let delay: f64 = n.hops(l).map(|h| n.link(h).delay).sum();
                let cost: f64 = n.hops(l).map(|h| n.link(h).tx_cost).sum();
                assert!(
                    (n.logical_delay(l) - delay).abs() <= 1e-9 * delay.max(1.0),
                    "{l:?}"
                );
                assert!(
                    (n.logical_cost(l) - cost).abs() <= 1e-12 * cost.max(1.0),
                    "{l:?}"
                );
            }
        }
    }
}

#[test]
fn logical_delay_is_the_sum_of_hop_delays() {
    check_hop_sums(&net(&diamond(), 2));
    check_hop_sums(&small(1.0, 1.0).network);
}

#[test]
fn backbone_counts_and_hop_sums() {
    let desc = builtin_large().network;
    let n = net(&desc, 3);
    assert_eq!(n.vms.len(), 1344);
    assert_eq!(n.datacenters.len(), 32);
    assert!(n.datacenters.iter().all(|d| d.members.len() == 42));
    let inter = n.links.iter().filter(|l| !l.intra_dc).count();
    assert_eq!(inter, 2 * 245);
    // one member per datacenter is enough: paths are shared by the pair
    let heads: Vec<VmId> = n.datacenters.iter().map(|d| d.members[0]).collect();
    for &a in &heads {
        for &b in &heads {
            for l in n.logical_links_between(a, b) {
                let delay: f64 = n.hops(l).map(|h| n.link(h).delay).sum();
                assert!((n.logical_delay(l) - delay).abs() <= 1e-9 * delay.max(1.0));
            }
        }
    }
}

#[test]
fn catalogue_is_deterministic() {
    let desc = builtin_large().network;
    let (a, b) = (net(&desc, 3), net(&desc, 3));
    assert_eq!(a.logical_link_count(), b.logical_link_count());
    for x in &a.datacenters {
        for y in &a.datacenters {
            if x.id != y.id {
                assert_eq!(a.dc_paths(x.id, y.id), b.dc_paths(x.id, y.id));
            }
        }
    }
}

// Physical link load: one request per service, each routing a share of its
// ingress-to-first-VNF edge over the x1 -> y1 paths.
fn load_fixture(
    rates: &[f64],
    fractions: &[f64],
) -> (nfv_planner::problem::Problem, DeploymentState) {
    let services: Vec<ServiceSpec> = rates
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            ServiceSpec::chain(
                format!("s{i}"),
                vec![vnf("f", 1.0, 1), vnf("g", 1.0, 1)],
                r,
                100.0,
                1.0,
            )
        })
        .collect();
    let requests: Vec<_> = (0..rates.len()).map(|i| (i, 1, 2)).collect();
    let p = problem(&diamond(), services, &requests, 3);
    let mut s = DeploymentState::empty(&p);
    for (k, &f) in fractions.iter().enumerate() {
        let d = Deployment {
            instances: vec![],
            routes: vec![Route {
                from: Endpoint::Vnf(0),
                to: Endpoint::Vnf(1),
                link: LogicalLinkId::Path {
                    src: VmId(0),
                    dst: VmId(1),
                    index: 0,
                },
                fraction: f,
            }],
        };
        s.push_segment(RequestId(k), 1..2, d);
    }
    (p, s)
}

fn first_hop(p: &nfv_planner::problem::Problem) -> LinkId {
    let path = LogicalLinkId::Path {
        src: VmId(0),
        dst: VmId(1),
        index: 0,
    };
    p.network
        .hops(path)
        .find(|&h| !p.network.link(h).intra_dc)
        .unwrap()
}

#[test]
fn link_load_examples() {
    let (p, s) = load_fixture(&[3.0], &[1.0]);
    let e = first_hop(&p);
    assert_eq!(link_load(&p, &s, e, 0), 0.0);
    assert!((link_load(&p, &s, e, 1) - 3.0).abs() < 1e-12);

    let (p, s) = load_fixture(&[4.0, 6.0], &[0.5, 0.5]);
    let e = first_hop(&p);
    assert!((link_load(&p, &s, e, 1) - 5.0).abs() < 1e-12);
    // the slower branch of the diamond carries nothing
    let unused = p
        .network
        .links
        .iter()
        .find(|l| !l.intra_dc && (l.delay - 3.0).abs() < 1e-12)
        .unwrap()
        .id;
    assert_eq!(link_load(&p, &s, unused, 1), 0.0);
}
