mod common;

use common::*;
use nfv_planner::baseline::run_bestfit;
use nfv_planner::heuristic::run_heuristic;
use nfv_planner::problem::Problem;
use nfv_planner::service::{Endpoint, ServiceSpec};
use nfv_planner::state::{
    incoming_traffic, outgoing_traffic, path_delay, processing_time, validate, Constraint,
    Deployment, DeploymentState, Instance, Route,
};
use nfv_planner::topology::{LogicalLinkId, VmId};
use nfv_planner::workload::RequestId;
use proptest::prelude::*;

const A: VmId = VmId(0);
const B: VmId = VmId(1);
const AB: LogicalLinkId = LogicalLinkId::Path {
    src: A,
    dst: B,
    index: 0,
};

fn route(from: Endpoint, to: Endpoint, link: LogicalLinkId, fraction: f64) -> Route {
    Route {
        from,
        to,
        link,
        fraction,
    }
}

/// Both VMs turn on at step 0 and are active while the request is served.
fn power(s: &mut DeploymentState, served: std::ops::Range<usize>) {
    for m in [A, B] {
        s.vms[m.0].turning_on[served.start - 1] = true;
        for t in served.clone() {
            s.vms[m.0].active[t] = true;
        }
    }
}

/// Two-VNF chain (ω = 0.1, 3 pkt/ms, 10 ms target) over two 1800-MIPS VMs
/// 2 ms apart, one request over steps 1..3. The processing times are 2 and
/// 3 ms.
fn chain_fixture() -> (Problem, DeploymentState) {
    let svc = ServiceSpec::chain(
        "s",
        vec![vnf("f", 0.1, 1), vnf("g", 0.1, 1)],
        3.0,
        10.0,
        1.0,
    );
    let p = problem(&pair(1800.0, 2.0), vec![svc], &[(0, 1, 3)], 4);
    let mut s = DeploymentState::empty(&p);
    let d = Deployment {
        instances: vec![
            Instance {
                vnf: 0,
                vm: A,
                rate: 3.5,
            },
            Instance {
                vnf: 1,
                vm: B,
                rate: 3.0 + 1.0 / 3.0,
            },
        ],
        routes: vec![
            route(
                Endpoint::Dummy,
                Endpoint::Vnf(0),
                LogicalLinkId::Ingress(A),
                1.0,
            ),
            route(Endpoint::Vnf(0), Endpoint::Vnf(1), AB, 1.0),
            route(
                Endpoint::Vnf(1),
                Endpoint::Dummy,
                LogicalLinkId::Egress(B),
                1.0,
            ),
        ],
    };
    s.push_segment(RequestId(0), 1..3, d);
    power(&mut s, 1..3);
    (p, s)
}

/// One VNF with two instances splitting 10 pkt/ms as 0.4 / 0.6.
fn split_fixture() -> (Problem, DeploymentState) {
    let svc = ServiceSpec::chain("s", vec![vnf("f", 0.1, 2)], 10.0, 10.0, 1.0);
    let p = problem(&pair(1800.0, 2.0), vec![svc], &[(0, 1, 2)], 3);
    let mut s = DeploymentState::empty(&p);
    let d = Deployment {
        instances: vec![
            Instance {
                vnf: 0,
                vm: A,
                rate: 5.0,
            },
            Instance {
                vnf: 0,
                vm: B,
                rate: 7.0,
            },
        ],
        routes: vec![
            route(
                Endpoint::Dummy,
                Endpoint::Vnf(0),
                LogicalLinkId::Ingress(A),
                0.4,
            ),
            route(
                Endpoint::Dummy,
                Endpoint::Vnf(0),
                LogicalLinkId::Ingress(B),
                0.6,
            ),
            route(
                Endpoint::Vnf(0),
                Endpoint::Dummy,
                LogicalLinkId::Egress(A),
                0.4,
            ),
            route(
                Endpoint::Vnf(0),
                Endpoint::Dummy,
                LogicalLinkId::Egress(B),
                0.6,
            ),
        ],
    };
    s.push_segment(RequestId(0), 1..2, d);
    power(&mut s, 1..2);
    (p, s)
}

#[test]
fn hand_built_chain_is_feasible() {
    let (p, s) = chain_fixture();
    let r = validate(&p, &s);
    assert!(r.is_feasible(), "{:?}", r.violations);
    let (p, s) = split_fixture();
    assert!(validate(&p, &s).is_feasible());
}

#[test]
fn traffic_in_and_out() {
    let (p, s) = chain_fixture();
    let k = RequestId(0);
    assert_eq!(incoming_traffic(&p, &s, k, A, 0, 1), 3.0);
    assert_eq!(outgoing_traffic(&p, &s, k, A, 0, 1), 3.0);
    assert_eq!(incoming_traffic(&p, &s, k, B, 0, 1), 0.0);
    assert_eq!(outgoing_traffic(&p, &s, k, B, 0, 1), 0.0);
    // not served at step 0
    assert_eq!(incoming_traffic(&p, &s, k, A, 0, 0), 0.0);

    let (p, s) = split_fixture();
    assert!((incoming_traffic(&p, &s, k, A, 0, 1) - 4.0).abs() < 1e-12);
    assert!((incoming_traffic(&p, &s, k, B, 0, 1) - 6.0).abs() < 1e-12);
    assert!((outgoing_traffic(&p, &s, k, A, 0, 1) - 4.0).abs() < 1e-12);
    assert!((outgoing_traffic(&p, &s, k, B, 0, 1) - 6.0).abs() < 1e-12);
}

#[test]
fn processing_time_inverts_the_margin() {
    let svc = ServiceSpec::chain("s", vec![vnf("f", 1.0, 1)], 0.003, 10.0, 1.0);
    let p = problem(&pair(1000.0, 2.0), vec![svc], &[(0, 1, 2)], 3);
    let mut s = DeploymentState::empty(&p);
    let d = |rate| Deployment {
        instances: vec![Instance {
            vnf: 0,
            vm: A,
            rate,
        }],
        routes: vec![
            route(
                Endpoint::Dummy,
                Endpoint::Vnf(0),
                LogicalLinkId::Ingress(A),
                1.0,
            ),
            route(
                Endpoint::Vnf(0),
                Endpoint::Dummy,
                LogicalLinkId::Egress(A),
                1.0,
            ),
        ],
    };
    s.push_segment(RequestId(0), 1..2, d(0.503));
    assert!((processing_time(&p, &s, A, 1).unwrap() - 2.0).abs() < 1e-9);
    s.requests[0][0].deployment = d(0.003);
    assert!(processing_time(&p, &s, A, 1).is_err());
    s.requests[0][0].deployment = d(1e9);
    assert!(processing_time(&p, &s, A, 1).unwrap() < 1e-8);
}

#[test]
fn path_delay_adds_links_and_processing() {
    let (p, s) = chain_fixture();
    let links = [LogicalLinkId::Ingress(A), AB, LogicalLinkId::Egress(B)];
    let d = path_delay(&p, &s, RequestId(0), &[0, 1], &links, 1);
    assert!((d - 7.0).abs() < 1e-9, "{d}");
    // the dummy links alone add nothing
    let d = path_delay(&p, &s, RequestId(0), &[0, 1], &links[..1], 1);
    assert!((d - 2.0).abs() < 1e-9, "{d}");
}

#[test]
fn empty_state_is_feasible_and_cold_start_is_not() {
    let (p, _) = chain_fixture();
    let mut s = DeploymentState::empty(&p);
    assert!(validate(&p, &s).is_feasible());
    s.vms[0].active[0] = true;
    let r = validate(&p, &s);
    assert_eq!(r.count(Constraint::VmSetup), 1);
    assert_eq!(r.violations.len(), 1);
}

// Every constraint family can be broken on its own and is then reported.

fn planned(seed: u64, heuristic: bool) -> (Problem, DeploymentState) {
    let scenario = small(1.0, 1.0);
    let p = scenario.problem(seed).unwrap();
    let s = if heuristic {
        run_heuristic(&p, &scenario.planner).unwrap().state
    } else {
        run_bestfit(&p).state
    };
    (p, s)
}

fn check_family(
    c: Constraint,
    seed: u64,
    heuristic: bool,
    pick: usize,
) -> Result<(), TestCaseError> {
    let (mut p, mut s) = planned(seed, heuristic);
    prop_assume!(s.requests.iter().any(|x| !x.is_empty()));
    prop_assert!(validate(&p, &s).is_feasible());
    break_constraint(c, &mut p, &mut s, pick);
    let r = validate(&p, &s);
    prop_assert!(r.has(c), "{c:?} not reported: {:?}", r.violations);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn each_family_is_violable_and_detected(
        seed in 0u64..50,
        family in 0usize..14,
        heuristic in any::<bool>(),
        pick in any::<usize>(),
    ) {
        check_family(Constraint::ALL[family], seed, heuristic, pick)?;
    }
}

#[test]
fn every_family_on_fixed_seeds() {
    for c in Constraint::ALL {
        for seed in 1..4 {
            check_family(c, seed, true, seed as usize).unwrap();
        }
    }
}
