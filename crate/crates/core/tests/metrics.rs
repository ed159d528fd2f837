mod common;

use common::*;
use nfv_planner::metrics::{admission_fractions, compute_metrics};
use nfv_planner::service::ServiceSpec;
use nfv_planner::state::{Deployment, DeploymentState};
use nfv_planner::units::UnitConstants;
use nfv_planner::workload::RequestId;
use proptest::prelude::*;

fn s1() -> ServiceSpec {
    let u = UnitConstants::default();
    ServiceSpec::chain(
        "s1",
        vec![vnf("f", 1.0, 1)],
        u.packets_per_ms(3.0),
        10.0,
        100.0,
    )
}

#[test]
fn nothing_served_costs_nothing() {
    let p = problem(&pair(600.0, 2.0), vec![s1()], &[(0, 1, 4)], 12);
    let m = compute_metrics(&p, &DeploymentState::empty(&p));
    assert_eq!(
        (m.revenue, m.link_cost, m.cpu_cost, m.idle_cost, m.objective),
        (0.0, 0.0, 0.0, 0.0, 0.0)
    );
    assert_eq!(m.cost_per_traffic, None);
    assert_eq!(m.admission, vec![Some(0.0)]);
}

#[test]
fn ten_active_minutes_of_idle_cost() {
    let p = problem(&pair(600.0, 2.0), vec![s1()], &[], 12);
    let mut s = DeploymentState::empty(&p);
    for t in 1..11 {
        s.vms[0].active[t] = true;
    }
    let m = compute_metrics(&p, &s);
    assert!((m.idle_cost - 0.018 * 10.0 / 60.0).abs() < 1e-12);
    assert!((m.idle_cost - 0.003).abs() < 1e-12);
    assert!((m.objective + 0.003).abs() < 1e-12);
}

#[test]
fn ten_served_minutes_of_s1() {
    let p = problem(&pair(600.0, 2.0), vec![s1()], &[(0, 1, 11)], 12);
    let mut s = DeploymentState::empty(&p);
    s.push_segment(RequestId(0), 1..11, Deployment::default());
    let m = compute_metrics(&p, &s);
    assert!((m.revenue - 180.0).abs() < 1e-9);
    // 3 Mb/s for 600 s
    assert!((m.served_traffic - 1.8).abs() < 1e-12);
}

#[test]
fn steps_outside_the_lifetime_earn_nothing() {
    let p = problem(&pair(600.0, 2.0), vec![s1()], &[(0, 2, 5)], 8);
    let mut s = DeploymentState::empty(&p);
    s.push_segment(RequestId(0), 1..7, Deployment::default());
    let per_step = p.revenue_per_step(0);
    assert!((compute_metrics(&p, &s).revenue - 3.0 * per_step).abs() < 1e-9);
}

#[test]
fn admission_fraction_counts_requests() {
    let p = problem(
        &pair(600.0, 2.0),
        vec![s1(), s1()],
        &[(0, 1, 2), (0, 1, 2), (0, 1, 2), (0, 1, 2)],
        3,
    );
    let mut s = DeploymentState::empty(&p);
    for k in 0..3 {
        s.push_segment(RequestId(k), 1..2, Deployment::default());
    }
    assert_eq!(admission_fractions(&p, &s), vec![Some(0.75), None]);
    s.push_segment(RequestId(3), 1..2, Deployment::default());
    assert_eq!(admission_fractions(&p, &s), vec![Some(1.0), None]);
}

proptest! {
    #[test]
    fn idle_cost_grows_with_powered_steps(
        on in prop::collection::vec((any::<bool>(), any::<bool>()), 10),
        extra in 0usize..10,
    ) {
        let p = problem(&pair(600.0, 2.0), vec![s1()], &[], 10);
        let mut s = DeploymentState::empty(&p);
        for (t, &(o, u)) in on.iter().enumerate() {
            s.vms[1].active[t] = o;
            s.vms[1].turning_on[t] = u && !o;
        }
        let before = compute_metrics(&p, &s).idle_cost;
        let powered = on.iter().filter(|(o, u)| *o || *u).count() as f64;
        prop_assert!((before - powered * p.network.vms[1].idle_cost).abs() < 1e-12);
        s.vms[1].active[extra] = true;
        s.vms[1].turning_on[extra] = false;
        prop_assert!(compute_metrics(&p, &s).idle_cost >= before);
    }
}
