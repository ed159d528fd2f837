mod common;

use common::*;
use nfv_planner::service::{
    cumulative_budgets, delay_budgets, edge_traffic, scaling_factor, solve_vnf_rates,
    traffic_profile, validate_service, Endpoint, ServiceSpec,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Egress traffic summed over every ingress-to-egress VNF path.
fn egress_by_paths(s: &ServiceSpec) -> f64 {
    fn walk(s: &ServiceSpec, q: usize, weight: f64) -> f64 {
        let mut total = weight * s.probability(Endpoint::Vnf(q), Endpoint::Dummy);
        for (&(a, b), &p) in &s.transitions {
            if a == q {
                total += walk(s, b, weight * p);
            }
        }
        total
    }
    s.ingress
        .iter()
        .map(|(&q, &p)| walk(s, q, s.ingress_rate * p))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rates_match_fixed_point_iteration(seed in any::<u64>(), acyclic in any::<bool>()) {
        let s = random_service(&mut ChaCha8Rng::seed_from_u64(seed), acyclic);
        prop_assert!(validate_service(&s).is_valid());
        let solved = solve_vnf_rates(&s).unwrap();
        let iterated = fixed_point(&s, 10_000);
        for (a, b) in solved.iter().zip(&iterated) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn egress_equals_path_sum(seed in any::<u64>()) {
        let s = random_service(&mut ChaCha8Rng::seed_from_u64(seed), true);
        let edges = edge_traffic(&s, &solve_vnf_rates(&s).unwrap());
        let egress: f64 = edges
            .iter()
            .filter(|((_, to), _)| *to == Endpoint::Dummy)
            .map(|(_, v)| v)
            .sum();
        let expected = egress_by_paths(&s);
        prop_assert!((egress - expected).abs() <= 1e-9 * expected.max(1e-12));
    }

    #[test]
    fn budgets_sum_to_target(
        omegas in prop::collection::vec(0.01f64..100.0, 1..8),
        target in 0.1f64..5000.0,
    ) {
        let vnfs = omegas.iter().enumerate().map(|(i, &w)| vnf(&i.to_string(), w, 1)).collect();
        let s = ServiceSpec::chain("c", vnfs, 1.0, target, 1.0);
        let b = delay_budgets(&s).unwrap();
        prop_assert!((b.iter().sum::<f64>() - target).abs() <= 1e-12 * target);
        let c = cumulative_budgets(&s).unwrap();
        prop_assert_eq!(*c.last().unwrap(), target);
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn branch_edges() {
    let mut s = ServiceSpec::chain(
        "b",
        vec![vnf("a", 1.0, 1), vnf("b", 1.0, 1), vnf("c", 1.0, 1)],
        10.0,
        50.0,
        1.0,
    );
    s.transitions = [((0, 1), 0.3), ((0, 2), 0.7)].into();
    s.egress = [(1, 1.0), (2, 1.0)].into();
    let p = traffic_profile(&s).unwrap();
    assert!((p.edge(Endpoint::Vnf(0), Endpoint::Vnf(1)) - 3.0).abs() < 1e-12);
    assert!((p.edge(Endpoint::Vnf(0), Endpoint::Vnf(2)) - 7.0).abs() < 1e-12);
    assert_eq!(p.edge(Endpoint::Dummy, Endpoint::Vnf(0)), 10.0);
    assert_eq!(p.scaling, vec![1.0, 1.0, 1.0]);
}

#[test]
fn firewall_dropping_half() {
    // the firewall forwards half of its traffic and drops the rest
    let mut s = ServiceSpec::chain(
        "fw",
        vec![vnf("fw", 1.0, 1), vnf("nat", 1.0, 1)],
        6.0,
        10.0,
        1.0,
    );
    s.transitions.insert((0, 1), 0.5);
    let edges = edge_traffic(&s, &solve_vnf_rates(&s).unwrap());
    let alpha = scaling_factor(&s, &edges).unwrap();
    assert_eq!(alpha, vec![0.5, 1.0]);
}

#[test]
fn catalogue_services_are_chains() {
    let p = small(1.0, 1.0);
    for s in &p.services {
        let r = validate_service(s);
        assert!(r.is_valid() && r.is_chain, "{}", s.name);
    }
    let s1 = &p.services[0];
    assert_eq!(delay_budgets(s1).unwrap(), vec![5.0, 5.0]);
    let s2 = &p.services[1];
    assert_eq!(delay_budgets(s2).unwrap(), vec![22.5, 22.5]);
}
