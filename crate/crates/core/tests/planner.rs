mod common;

use common::*;
use nfv_planner::baseline::run_bestfit;
use nfv_planner::exact::{solve_exact, ExactConfig};
use nfv_planner::heuristic::{
    bsrd, run_heuristic, BsrdOptions, Decision, Failure, PlannerConfig, ResourceView,
};
use nfv_planner::metrics::compute_metrics;
use nfv_planner::problem::Problem;
use nfv_planner::scenario::{
    backbone, builtin_large, BackboneParams, PreparedScenario, WorkloadSpec,
};
use nfv_planner::service::{Endpoint, ServiceSpec};
use nfv_planner::state::{link_load, validate};
use nfv_planner::topology::VmId;
use nfv_planner::workload::{horizon_revenue, RequestId};

const A: VmId = VmId(0);
const B: VmId = VmId(1);

fn plan_one(p: &Problem, options: BsrdOptions) -> nfv_planner::heuristic::BsrdOutcome {
    let r = &p.workload.requests[0];
    let view = ResourceView::new(p, 0..p.steps(), None);
    bsrd(&view, r.id, r.arrival..r.departure, options)
}

fn single(rate: f64, target: f64, max_instances: usize) -> ServiceSpec {
    ServiceSpec::chain("s", vec![vnf("f", 1.0, max_instances)], rate, target, 1.0)
}

#[test]
fn single_vnf_takes_the_cheapest_vm_with_the_minimal_rate() {
    // 2 ms budget and 1 pkt/ms incoming: 1/(μ − 1) = 2
    let p = problem(
        &pair(5000.0, 2.0),
        vec![single(1.0, 2.0, 1)],
        &[(0, 1, 2)],
        3,
    );
    let out = plan_one(&p, BsrdOptions::FULL);
    let d = out.deployment.unwrap();
    assert_eq!((out.rounds, out.backtracks), (1, 0));
    assert_eq!(d.instances.len(), 1);
    assert_eq!(d.instances[0].vm, A);
    assert!((d.instances[0].rate - 1.5).abs() < 1e-12);
}

#[test]
fn late_delay_failure_backtracks_to_a_critical_redeployment() {
    // ω = [1, 1], 4 ms target: the cheap first placement spends its whole
    // 2 ms budget and the 1.9 ms hop leaves too little for the second VNF.
    let svc = ServiceSpec::chain("s", vec![vnf("f", 1.0, 1), vnf("g", 1.0, 1)], 1.0, 4.0, 1.0);
    let p = problem(&pair(5000.0, 1.9), vec![svc], &[(0, 1, 2)], 3);
    let out = plan_one(&p, BsrdOptions::FULL);
    assert_eq!((out.rounds, out.backtracks), (4, 1));
    let d = out.deployment.unwrap();
    // critical mode runs the first VNF at full speed
    assert!((d.rate(0, A) - 5.0).abs() < 1e-12);
    let left = 4.0 - 0.25 - 1.9;
    assert!((d.rate(1, B) - (1.0 + 1.0 / left)).abs() < 1e-9);

    // without backtracking the request is lost
    let out = plan_one(&p, BsrdOptions::BEST_FIT);
    assert_eq!(out.deployment, Err(Failure::Delay));
}

#[test]
fn traffic_shortage_rejects_with_nothing_kept() {
    let p = problem(
        &pair(5000.0, 2.0),
        vec![single(10.0, 100.0, 1)],
        &[(0, 1, 2)],
        3,
    );
    let out = plan_one(&p, BsrdOptions::FULL);
    assert_eq!(out.deployment, Err(Failure::Traffic));
    assert_eq!(out.backtracks, 0);
}

#[test]
fn two_instances_split_in_proportion_to_capacity() {
    let p = problem(
        &pair(6000.0, 2.0),
        vec![single(10.0, 100.0, 2)],
        &[(0, 1, 2)],
        3,
    );
    let d = plan_one(&p, BsrdOptions::FULL).deployment.unwrap();
    assert_eq!(d.instances.len(), 2);
    for r in d.routes.iter().filter(|r| r.from == Endpoint::Dummy) {
        assert!((r.fraction - 0.5).abs() < 1e-12, "{r:?}");
    }
    for i in &d.instances {
        assert!((i.rate - 5.01).abs() < 1e-9);
    }
    // a single instance never fits
    assert!(plan_one(&p, BsrdOptions::BEST_FIT).deployment.is_err());
}

#[test]
fn higher_revenue_is_planned_first() {
    // request 0 earns 4 € per step, request 1 earns 18 € per step
    let svc = |mbps: f64, per_gb: f64| {
        let u = nfv_planner::units::UnitConstants::default();
        ServiceSpec::chain(
            "s",
            vec![vnf("f", 1.0, 1)],
            u.packets_per_ms(mbps),
            50.0,
            per_gb,
        )
    };
    let p = problem(
        &pair(1800.0, 2.0),
        vec![svc(2.0, 100.0 / 3.0), svc(3.0, 100.0)],
        &[(0, 1, 11), (1, 1, 11)],
        12,
    );
    let u = &p.units;
    let rev = |k: usize| {
        let r = &p.workload.requests[k];
        horizon_revenue(r, &p.services[r.service], 1, 10, u)
    };
    assert!((rev(1) - 180.0).abs() < 1e-9);
    assert!((rev(0) - 40.0).abs() < 1e-9);
    let out = run_heuristic(
        &p,
        &PlannerConfig {
            horizon: 10,
            period: 1,
            k_paths: 3,
        },
    )
    .unwrap();
    let first: Vec<usize> = out
        .decisions
        .iter()
        .filter(|d| d.window == 0)
        .map(|d| d.request)
        .collect();
    assert_eq!(first, vec![1, 0]);
}

#[test]
fn one_request_earns_its_horizon_revenue() {
    let svc = ServiceSpec::chain(
        "s",
        vec![vnf("f", 1.0, 1), vnf("g", 1.0, 1)],
        1.0,
        50.0,
        3.0,
    );
    let p = problem(&pair(5000.0, 2.0), vec![svc], &[(0, 3, 8)], 10);
    let out = run_heuristic(
        &p,
        &PlannerConfig {
            horizon: 4,
            period: 2,
            k_paths: 3,
        },
    )
    .unwrap();
    assert!(validate(&p, &out.state).is_feasible());
    assert_eq!(out.state.served_steps(RequestId(0)), 5);
    let r = &p.workload.requests[0];
    let m = compute_metrics(&p, &out.state);
    let expected = horizon_revenue(r, &p.services[0], 0, 10, &p.units);
    assert!((m.revenue - expected).abs() < 1e-9 * expected);
    // both VMs turn on exactly one step before the request starts
    for vm in &out.state.vms {
        assert!(vm.turning_on[2] && !vm.turning_on[..2].iter().any(|&x| x));
    }
}

#[test]
fn small_scale_runs_are_feasible() {
    for (traffic, delay) in [(1.0, 1.0), (2.0, 1.0), (1.0, 3.5)] {
        let sc = small(traffic, delay);
        for seed in 0..50 {
            let p = sc.problem(seed).unwrap();
            let h = run_heuristic(&p, &sc.planner).unwrap();
            let r = validate(&p, &h.state);
            assert!(r.is_feasible(), "heuristic seed {seed}: {:?}", r.violations);
            let b = run_bestfit(&p);
            let r = validate(&p, &b.state);
            assert!(r.is_feasible(), "best-fit seed {seed}: {:?}", r.violations);
        }
    }
}

/// A few hundred VMs on a synthetic backbone with the large catalogue.
fn regional(k_paths: usize) -> PreparedScenario {
    let mut s = builtin_large();
    s.network = backbone(&BackboneParams {
        switches: 40,
        links: 55,
        datacenters: 8,
        vms_per_tier: 3,
        ..Default::default()
    });
    s.workload = WorkloadSpec::Poisson {
        rate: 0.5,
        mean_duration: 40.0,
        lifespan: 240,
    };
    s.planner.k_paths = k_paths;
    s.prepare().unwrap()
}

#[test]
fn backtracking_is_bounded() {
    let mut worst_backtracks = 0;
    for (sc, seeds) in [(small(2.0, 2.5), 0..50), (regional(3), 0..4)] {
        for seed in seeds {
            let p = sc.problem(seed).unwrap();
            for out in [run_heuristic(&p, &sc.planner).unwrap(), run_bestfit(&p)] {
                for d in &out.decisions {
                    let q = p.services[p.workload.requests[d.request].service]
                        .vnfs
                        .len();
                    // each backtrack spends a token earned by a forward
                    // deployment of an earlier VNF
                    assert!(d.backtracks < q, "{d:?}");
                    assert!(q + d.backtracks <= 2 * q);
                    assert!(d.rounds <= 3 * q - 2, "{d:?}");
                    worst_backtracks = worst_backtracks.max(d.backtracks);
                }
            }
        }
    }
    assert!(worst_backtracks > 0, "no run exercised backtracking");
}

#[test]
fn bestfit_never_backtracks_or_splits() {
    let sc = regional(3);
    for seed in 0..3 {
        let p = sc.problem(seed).unwrap();
        let out = run_bestfit(&p);
        assert_eq!(out.stats.backtracks, 0);
        for segs in &out.state.requests {
            for s in segs {
                let mut vnfs: Vec<usize> = s.deployment.instances.iter().map(|i| i.vnf).collect();
                let n = vnfs.len();
                vnfs.dedup();
                assert_eq!(vnfs.len(), n);
            }
        }
    }
}

#[test]
fn regional_runs_are_feasible_within_link_capacity() {
    let sc = regional(3);
    for seed in 0..3 {
        let p = sc.problem(seed).unwrap();
        for state in [
            run_heuristic(&p, &sc.planner).unwrap().state,
            run_bestfit(&p).state,
        ] {
            let r = validate(&p, &state);
            assert!(
                r.is_feasible(),
                "seed {seed}: {:?}",
                &r.violations[..r.violations.len().min(5)]
            );
            for t in 0..state.steps {
                for l in &p.network.links {
                    assert!(link_load(&p, &state, l.id, t) <= l.bandwidth * (1.0 + 1e-6));
                }
            }
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let sc = regional(3);
    let p = sc.problem(5).unwrap();
    let a = run_heuristic(&p, &sc.planner).unwrap();
    let b = run_heuristic(&p, &sc.planner).unwrap();
    assert_eq!(a.state, b.state);
    assert_eq!(a.decisions, b.decisions);
    assert_eq!(run_bestfit(&p).state, run_bestfit(&p).state);
}

#[test]
fn planner_work_scales_with_the_link_catalogue() {
    let (narrow, wide) = (regional(2), regional(4));
    let links = |sc: &PreparedScenario| sc.network.logical_link_count() as f64;
    let catalogue = links(&wide) / links(&narrow);
    assert!(catalogue > 1.5, "catalogue ratio {catalogue}");
    let mut ratios = Vec::new();
    for seed in 0..3 {
        let work = |sc: &PreparedScenario| {
            let p = sc.problem(seed).unwrap();
            run_heuristic(&p, &sc.planner).unwrap().stats.work as f64
        };
        ratios.push(work(&wide) / work(&narrow));
    }
    // linear in |L| up to the log factor
    let bound = 2.5 * catalogue.log2().max(1.0);
    for r in &ratios {
        assert!(*r <= bound, "work ratio {r}, catalogue ratio {catalogue}");
    }
}

#[test]
fn exact_objective_bounds_the_heuristic() {
    let sc = small(1.5, 1.0);
    for seed in 0..50 {
        let p = sc.problem(seed).unwrap();
        let h = compute_metrics(&p, &run_heuristic(&p, &sc.planner).unwrap().state);
        let e = solve_exact(&p, &ExactConfig::default()).unwrap();
        assert!(validate(&p, &e.state).is_feasible());
        let recomputed = compute_metrics(&p, &e.state).objective;
        assert!((e.objective - recomputed).abs() <= 1e-9 * recomputed.abs().max(1.0));
        assert!(
            e.objective >= h.objective - 1e-9,
            "seed {seed}: {} < {}",
            e.objective,
            h.objective
        );
    }
}

#[test]
fn held_requests_keep_a_continuous_deployment() {
    let sc = small(2.0, 1.0);
    for seed in 0..50 {
        let p = sc.problem(seed).unwrap();
        let out = run_heuristic(&p, &sc.planner).unwrap();
        for (k, segs) in out.state.requests.iter().enumerate() {
            let r = &p.workload.requests[k];
            if !segs.is_empty() {
                assert_eq!(out.state.served_steps(RequestId(k)), r.duration());
            }
        }
        // a request is rejected at most once and never served afterwards
        for d in &out.decisions {
            if let Decision::Rejected(_) = d.decision {
                assert!(!out.state.is_admitted(RequestId(d.request)));
            }
        }
    }
}
