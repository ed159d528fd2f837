//! Services as VNF forwarding graphs and the static traffic quantities derived
//! from them: per-VNF arrival rates, per-edge traffic, scaling factors and
//! per-VNF delay budgets.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use pathfinding::directed::strongly_connected_components::strongly_connected_components;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of ingress-to-egress VNF sequences materialised per service.
pub const MAX_VNF_SEQUENCES: usize = 64;

/// A VNF of a forwarding graph, or the dummy end-point that sources and
/// sinks the service traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Endpoint {
    Dummy,
    Vnf(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnfSpec {
    pub name: String,
    /// Computation units per packet.
    pub complexity: f64,
    pub max_instances: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceSpec {
    pub name: String,
    pub vnfs: Vec<VnfSpec>,
    /// Transition probabilities between VNFs, keyed by VNF index.
    pub transitions: BTreeMap<(usize, usize), f64>,
    pub ingress: BTreeMap<usize, f64>,
    pub egress: BTreeMap<usize, f64>,
    /// packets/ms
    pub ingress_rate: f64,
    /// ms
    pub target_delay: f64,
    /// Currency per Gb served.
    pub revenue_per_gb: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ServiceError {
    #[error("service {service}: traffic diverges in the cycle through VNFs {vnfs:?}")]
    Divergent { service: String, vnfs: Vec<usize> },
    #[error("service {service}: VNF {vnf} receives no traffic")]
    Unreachable { service: String, vnf: usize },
    #[error("service {service}: forwarding graph is not a chain")]
    NotAChain { service: String },
    #[error("service {service}: forwarding graph is cyclic")]
    Cyclic { service: String },
    #[error("service {service}: more than {MAX_VNF_SEQUENCES} ingress-to-egress sequences")]
    TooManySequences { service: String },
    #[error("service {service}: {}", .problems.join("; "))]
    Invalid {
        service: String,
        problems: Vec<String>,
    },
}

/// Static traffic of one service: per-VNF rates, per-edge rates including
/// ingress and egress edges, and per-VNF scaling factors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficProfile {
    pub vnf_rates: Vec<f64>,
    pub edge_traffic: BTreeMap<(Endpoint, Endpoint), f64>,
    pub scaling: Vec<f64>,
}

impl TrafficProfile {
    pub fn edge(&self, from: Endpoint, to: Endpoint) -> f64 {
        self.edge_traffic.get(&(from, to)).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ServiceReport {
    pub violations: Vec<String>,
    pub is_chain: bool,
}

impl ServiceReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

const PROB_TOL: f64 = 1e-9;

impl ServiceSpec {
    /// A chain `vnfs[0] -> vnfs[1] -> ... -> egress` where every transition
    /// has probability one.
    pub fn chain(
        name: impl Into<String>,
        vnfs: Vec<VnfSpec>,
        ingress_rate: f64,
        target_delay: f64,
        revenue_per_gb: f64,
    ) -> Self {
        let n = vnfs.len();
        let transitions = (1..n).map(|i| ((i - 1, i), 1.0)).collect();
        let mut ingress = BTreeMap::new();
        let mut egress = BTreeMap::new();
        if n > 0 {
            ingress.insert(0, 1.0);
            egress.insert(n - 1, 1.0);
        }
        ServiceSpec {
            name: name.into(),
            vnfs,
            transitions,
            ingress,
            egress,
            ingress_rate,
            target_delay,
            revenue_per_gb,
        }
    }

    pub fn probability(&self, from: Endpoint, to: Endpoint) -> f64 {
        let p = match (from, to) {
            (Endpoint::Dummy, Endpoint::Vnf(q)) => self.ingress.get(&q),
            (Endpoint::Vnf(q), Endpoint::Dummy) => self.egress.get(&q),
            (Endpoint::Vnf(a), Endpoint::Vnf(b)) => self.transitions.get(&(a, b)),
            (Endpoint::Dummy, Endpoint::Dummy) => None,
        };
        p.copied().unwrap_or(0.0)
    }

    /// Every edge with positive probability, ingress and egress included.
    pub fn edges(&self) -> Vec<(Endpoint, Endpoint, f64)> {
        let mut out: Vec<_> = self
            .ingress
            .iter()
            .map(|(&q, &p)| (Endpoint::Dummy, Endpoint::Vnf(q), p))
            .chain(
                self.transitions
                    .iter()
                    .map(|(&(a, b), &p)| (Endpoint::Vnf(a), Endpoint::Vnf(b), p)),
            )
            .chain(
                self.egress
                    .iter()
                    .map(|(&q, &p)| (Endpoint::Vnf(q), Endpoint::Dummy, p)),
            )
            .filter(|e| e.2 > 0.0)
            .collect();
        out.sort_by_key(|e| (e.0, e.1));
        out
    }

    fn successors(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.transitions
            .range((q, 0)..(q + 1, 0))
            .filter(|(_, &p)| p > 0.0)
            .map(|(&(_, b), _)| b)
    }

    /// True when the graph is `0 -> 1 -> ... -> n-1` in listed order, entered
    /// only at VNF 0.
    pub fn is_chain(&self) -> bool {
        let n = self.vnfs.len();
        if n == 0 {
            return false;
        }
        let ingress_ok = self.ingress.iter().all(|(&q, &p)| {
            if q == 0 {
                (p - 1.0).abs() <= PROB_TOL
            } else {
                p == 0.0
            }
        });
        let transitions_ok = self
            .transitions
            .iter()
            .filter(|(_, &p)| p > 0.0)
            .all(|(&(a, b), _)| b == a + 1)
            && (1..n).all(|i| self.probability(Endpoint::Vnf(i - 1), Endpoint::Vnf(i)) > 0.0);
        ingress_ok && transitions_ok
    }

    pub fn vnf_index(&self, name: &str) -> Option<usize> {
        self.vnfs.iter().position(|v| v.name == name)
    }
}

/// Checks probability normalisation, positivity and index ranges.
pub fn validate_service(s: &ServiceSpec) -> ServiceReport {
    let mut v = Vec::new();
    let n = s.vnfs.len();
    if n == 0 {
        v.push("service has no VNFs".to_string());
    }
    for (i, vnf) in s.vnfs.iter().enumerate() {
        if !(vnf.complexity > 0.0 && vnf.complexity.is_finite()) {
            v.push(format!("VNF {i} complexity must be positive"));
        }
        if vnf.max_instances == 0 {
            v.push(format!("VNF {i} max_instances must be at least 1"));
        }
    }
    if !(s.ingress_rate > 0.0 && s.ingress_rate.is_finite()) {
        v.push("ingress rate must be positive".into());
    }
    if !(s.target_delay > 0.0 && s.target_delay.is_finite()) {
        v.push("target delay must be positive".into());
    }
    if !(s.revenue_per_gb >= 0.0 && s.revenue_per_gb.is_finite()) {
        v.push("revenue must be non-negative".into());
    }
    let mut in_range = true;
    for (from, to, p) in s
        .ingress
        .iter()
        .map(|(&q, &p)| (None, Some(q), p))
        .chain(
            s.transitions
                .iter()
                .map(|(&(a, b), &p)| (Some(a), Some(b), p)),
        )
        .chain(s.egress.iter().map(|(&q, &p)| (Some(q), None, p)))
    {
        if from.is_some_and(|q| q >= n) || to.is_some_and(|q| q >= n) {
            v.push(format!("edge {from:?}->{to:?} references an unknown VNF"));
            in_range = false;
        }
        if !(0.0..=1.0).contains(&p) {
            v.push(format!(
                "probability {p} of edge {from:?}->{to:?} outside [0,1]"
            ));
        }
    }
    let ingress_sum: f64 = s.ingress.values().sum();
    if (ingress_sum - 1.0).abs() > PROB_TOL {
        v.push(format!(
            "ingress probabilities sum to {ingress_sum}, expected 1"
        ));
    }
    if in_range {
        for q in 0..n {
            let out: f64 = s.egress.get(&q).copied().unwrap_or(0.0)
                + s.successors_with_prob(q).map(|(_, p)| p).sum::<f64>();
            if out > 1.0 + PROB_TOL {
                v.push(format!(
                    "outgoing probabilities of VNF {q} sum to {out}, above 1"
                ));
            }
        }
    }
    ServiceReport {
        is_chain: v.is_empty() && s.is_chain(),
        violations: v,
    }
}

impl ServiceSpec {
    fn successors_with_prob(&self, q: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.transitions
            .range((q, 0)..(q + 1, 0))
            .map(|(&(_, b), &p)| (b, p))
    }
}

fn scc_check(s: &ServiceSpec) -> Result<bool, ServiceError> {
    let n = s.vnfs.len();
    let nodes: Vec<usize> = (0..n).collect();
    let sccs = strongly_connected_components(&nodes, |&q| s.successors(q).collect::<Vec<_>>());
    let mut cyclic = false;
    for mut comp in sccs {
        let self_loop =
            comp.len() == 1 && s.probability(Endpoint::Vnf(comp[0]), Endpoint::Vnf(comp[0])) > 0.0;
        if comp.len() < 2 && !self_loop {
            continue;
        }
        cyclic = true;
        comp.sort_unstable();
        // Traffic diverges when no VNF of the cycle lets any mass escape.
        let leaks = comp.iter().any(|&q| {
            let inside: f64 = s
                .successors_with_prob(q)
                .filter(|(b, _)| comp.binary_search(b).is_ok())
                .map(|(_, p)| p)
                .sum();
            inside < 1.0 - 1e-12
        });
        if !leaks {
            return Err(ServiceError::Divergent {
                service: s.name.clone(),
                vnfs: comp,
            });
        }
    }
    Ok(cyclic)
}

fn topological_order(s: &ServiceSpec) -> Vec<usize> {
    let n = s.vnfs.len();
    let mut indeg = vec![0usize; n];
    for q in 0..n {
        for b in s.successors(q) {
            indeg[b] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&q| indeg[q] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(q) = ready.pop() {
        order.push(q);
        for b in s.successors(q) {
            indeg[b] -= 1;
            if indeg[b] == 0 {
                ready.push(b);
            }
        }
    }
    order
}

/// Total incoming traffic of every VNF (packets/ms), solving
/// `λ(q) = λ_new·P(∘,q) + Σ_{q'} λ(q')·P(q',q)`.
pub fn solve_vnf_rates(s: &ServiceSpec) -> Result<Vec<f64>, ServiceError> {
    let n = s.vnfs.len();
    let cyclic = scc_check(s)?;
    let external = |q: usize| s.ingress_rate * s.ingress.get(&q).copied().unwrap_or(0.0);
    if !cyclic {
        let mut rates = vec![0.0; n];
        for q in topological_order(s) {
            rates[q] += external(q);
            let r = rates[q];
            for (b, p) in s.successors_with_prob(q) {
                rates[b] += r * p;
            }
        }
        return Ok(rates);
    }
    // (I - Pᵀ) λ = λ_ext
    let mut a = DMatrix::<f64>::identity(n, n);
    for (&(from, to), &p) in &s.transitions {
        a[(to, from)] -= p;
    }
    let b = DVector::from_iterator(n, (0..n).map(external));
    let x = a.lu().solve(&b).ok_or_else(|| ServiceError::Divergent {
        service: s.name.clone(),
        vnfs: (0..n).collect(),
    })?;
    if x.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return Err(ServiceError::Divergent {
            service: s.name.clone(),
            vnfs: (0..n).collect(),
        });
    }
    Ok(x.iter().map(|v| v.max(0.0)).collect())
}

/// Per-edge traffic `Λ(q1,q2) = λ(q1)·P(q1,q2)`, with ingress edges carrying
/// `λ_new·P(∘,q)`.
pub fn edge_traffic(s: &ServiceSpec, rates: &[f64]) -> BTreeMap<(Endpoint, Endpoint), f64> {
    s.edges()
        .into_iter()
        .map(|(from, to, p)| {
            let source = match from {
                Endpoint::Dummy => s.ingress_rate,
                Endpoint::Vnf(q) => rates[q],
            };
            ((from, to), source * p)
        })
        .collect()
}

/// Ratio of outgoing to incoming traffic for every VNF.
pub fn scaling_factor(
    s: &ServiceSpec,
    edges: &BTreeMap<(Endpoint, Endpoint), f64>,
) -> Result<Vec<f64>, ServiceError> {
    let n = s.vnfs.len();
    let mut inc = vec![0.0; n];
    let mut out = vec![0.0; n];
    for (&(from, to), &traffic) in edges {
        if let Endpoint::Vnf(q) = to {
            inc[q] += traffic;
        }
        if let Endpoint::Vnf(q) = from {
            out[q] += traffic;
        }
    }
    (0..n)
        .map(|q| {
            if inc[q] > 0.0 {
                Ok(out[q] / inc[q])
            } else {
                Err(ServiceError::Unreachable {
                    service: s.name.clone(),
                    vnf: q,
                })
            }
        })
        .collect()
}

pub fn traffic_profile(s: &ServiceSpec) -> Result<TrafficProfile, ServiceError> {
    let report = validate_service(s);
    if !report.is_valid() {
        return Err(ServiceError::Invalid {
            service: s.name.clone(),
            problems: report.violations,
        });
    }
    let vnf_rates = solve_vnf_rates(s)?;
    let edge_traffic = edge_traffic(s, &vnf_rates);
    let scaling = scaling_factor(s, &edge_traffic)?;
    Ok(TrafficProfile {
        vnf_rates,
        edge_traffic,
        scaling,
    })
}

/// Per-VNF share of the target delay, proportional to complexity (ms).
pub fn delay_budgets(s: &ServiceSpec) -> Result<Vec<f64>, ServiceError> {
    if !s.is_chain() {
        return Err(ServiceError::NotAChain {
            service: s.name.clone(),
        });
    }
    let total: f64 = s.vnfs.iter().map(|v| v.complexity).sum();
    Ok(s.vnfs
        .iter()
        .map(|v| s.target_delay * v.complexity / total)
        .collect())
}

/// Budget accumulated up to and including each chain position. The last
/// entry is exactly the target delay.
pub fn cumulative_budgets(s: &ServiceSpec) -> Result<Vec<f64>, ServiceError> {
    delay_budgets(s)?;
    let total: f64 = s.vnfs.iter().map(|v| v.complexity).sum();
    let n = s.vnfs.len();
    let mut prefix = 0.0;
    Ok(s.vnfs
        .iter()
        .enumerate()
        .map(|(i, v)| {
            prefix += v.complexity;
            if i + 1 == n {
                s.target_delay
            } else {
                s.target_delay * prefix / total
            }
        })
        .collect())
}

/// All ingress-to-egress VNF sequences of an acyclic forwarding graph.
pub fn vnf_sequences(s: &ServiceSpec) -> Result<Vec<Vec<usize>>, ServiceError> {
    if scc_check(s)? {
        return Err(ServiceError::Cyclic {
            service: s.name.clone(),
        });
    }
    fn walk(
        s: &ServiceSpec,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<(), ServiceError> {
        let q = *path.last().unwrap();
        if s.probability(Endpoint::Vnf(q), Endpoint::Dummy) > 0.0 {
            if out.len() == MAX_VNF_SEQUENCES {
                return Err(ServiceError::TooManySequences {
                    service: s.name.clone(),
                });
            }
            out.push(path.clone());
        }
        for b in s.successors(q).collect::<Vec<_>>() {
            path.push(b);
            walk(s, path, out)?;
            path.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    for (&q, &p) in &s.ingress {
        if p > 0.0 {
            walk(s, &mut vec![q], &mut out)?;
        }
    }
    Ok(out)
}
