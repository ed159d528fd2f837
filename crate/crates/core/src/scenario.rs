//! Scenario files and the two built-in scenarios.
//!
//! A scenario bundles the network, the service catalogue, the workload (a
//! Poisson model or an explicit request list), planner settings and the
//! traffic and delay multipliers. Multipliers scale service ingress rates and
//! physical link delays and nothing else.

use std::collections::BTreeMap;

use pathfinding::undirected::kruskal::kruskal_indices;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristic::{PlannerConfig, PlannerError};
use crate::problem::{Problem, ProblemError};
use crate::service::{validate_service, ServiceError, ServiceSpec, VnfSpec};
use crate::topology::{
    build_network, DatacenterDescription, LinkDescription, PhysicalNetwork, TopologyDescription,
    TopologyError, VmDescription,
};
use crate::units::UnitConstants;
use crate::workload::{generate_poisson, WorkloadError, WorkloadFile};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub id: String,
    #[serde(default)]
    pub units: UnitConstants,
    pub network: TopologyDescription,
    pub services: Vec<ServiceDescription>,
    pub workload: WorkloadSpec,
    pub planner: PlannerConfig,
    #[serde(default)]
    pub multipliers: Multipliers,
    /// Base seed; repetition `i` uses `seed + i`.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Multipliers {
    pub traffic: f64,
    pub delay: f64,
}

impl Default for Multipliers {
    fn default() -> Self {
        Multipliers {
            traffic: 1.0,
            delay: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceDescription {
    pub name: String,
    pub vnfs: Vec<VnfDescription>,
    #[serde(default)]
    pub transitions: Vec<TransitionDescription>,
    pub ingress: Vec<EndpointDescription>,
    pub egress: Vec<EndpointDescription>,
    pub ingress_rate_mbps: f64,
    pub target_delay_ms: f64,
    pub revenue_per_gb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VnfDescription {
    pub name: String,
    /// Million instructions per packet.
    pub complexity: f64,
    #[serde(default = "one")]
    pub max_instances: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDescription {
    pub from: String,
    pub to: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointDescription {
    pub vnf: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkloadSpec {
    #[serde(rename_all = "snake_case")]
    Poisson {
        /// Mean request arrivals per step.
        rate: f64,
        /// Mean request duration in steps.
        mean_duration: f64,
        lifespan: usize,
    },
    Explicit(WorkloadFile),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unsupported scenario version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("{0} multiplier must be positive and finite, got {1}")]
    Multiplier(&'static str, f64),
    #[error("service {service}: unknown VNF `{vnf}`")]
    UnknownVnf { service: String, vnf: String },
    #[error("duplicate service name `{0}`")]
    DuplicateService(String),
    #[error("explicit workload step length {0} ms differs from the unit step {1} ms")]
    StepMismatch(f64, f64),
    #[error("invalid Poisson workload parameters")]
    Poisson,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
}

impl ServiceDescription {
    /// Linear chain of `vnfs`, every transition with probability one.
    pub fn chain(
        name: &str,
        vnfs: Vec<VnfDescription>,
        ingress_rate_mbps: f64,
        target_delay_ms: f64,
        revenue_per_gb: f64,
    ) -> Self {
        let transitions = vnfs
            .windows(2)
            .map(|w| TransitionDescription {
                from: w[0].name.clone(),
                to: w[1].name.clone(),
                probability: 1.0,
            })
            .collect();
        let end = |v: &VnfDescription| EndpointDescription {
            vnf: v.name.clone(),
            probability: 1.0,
        };
        ServiceDescription {
            name: name.into(),
            ingress: vnfs.first().map(end).into_iter().collect(),
            egress: vnfs.last().map(end).into_iter().collect(),
            vnfs,
            transitions,
            ingress_rate_mbps,
            target_delay_ms,
            revenue_per_gb,
        }
    }

    pub fn to_spec(
        &self,
        units: &UnitConstants,
        traffic: f64,
    ) -> Result<ServiceSpec, ScenarioError> {
        let index = |vnf: &str| {
            self.vnfs
                .iter()
                .position(|v| v.name == vnf)
                .ok_or_else(|| ScenarioError::UnknownVnf {
                    service: self.name.clone(),
                    vnf: vnf.into(),
                })
        };
        let mut transitions = BTreeMap::new();
        for t in &self.transitions {
            transitions.insert((index(&t.from)?, index(&t.to)?), t.probability);
        }
        let ends = |list: &[EndpointDescription]| -> Result<BTreeMap<usize, f64>, ScenarioError> {
            list.iter()
                .map(|e| Ok((index(&e.vnf)?, e.probability)))
                .collect()
        };
        let spec = ServiceSpec {
            name: self.name.clone(),
            vnfs: self
                .vnfs
                .iter()
                .map(|v| VnfSpec {
                    name: v.name.clone(),
                    complexity: v.complexity,
                    max_instances: v.max_instances,
                })
                .collect(),
            transitions,
            ingress: ends(&self.ingress)?,
            egress: ends(&self.egress)?,
            ingress_rate: units.packets_per_ms(self.ingress_rate_mbps * traffic),
            target_delay: self.target_delay_ms,
            revenue_per_gb: self.revenue_per_gb,
        };
        let report = validate_service(&spec);
        if !report.is_valid() {
            return Err(ServiceError::Invalid {
                service: spec.name,
                problems: report.violations,
            }
            .into());
        }
        Ok(spec)
    }
}

/// Network and services of a scenario with multipliers applied, ready to be
/// combined with seeded workloads.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub id: String,
    pub network: PhysicalNetwork,
    pub services: Vec<ServiceSpec>,
    pub workload: WorkloadSpec,
    pub planner: PlannerConfig,
    pub units: UnitConstants,
    pub multipliers: Multipliers,
}

impl PreparedScenario {
    pub fn problem(&self, seed: u64) -> Result<Problem, ScenarioError> {
        let workload = match &self.workload {
            WorkloadSpec::Poisson {
                rate,
                mean_duration,
                lifespan,
            } => generate_poisson(
                self.services.len(),
                *rate,
                *mean_duration,
                *lifespan,
                self.units.step_ms,
                seed,
            ),
            WorkloadSpec::Explicit(file) => file.clone().into_workload(&self.services)?,
        };
        Ok(Problem::new(
            self.network.clone(),
            self.services.clone(),
            workload,
            self.units,
        )?)
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.check()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn check(&self) -> Result<(), ScenarioError> {
        if self.version != SCHEMA_VERSION {
            return Err(ScenarioError::Version(self.version));
        }
        for (name, v) in [
            ("traffic", self.multipliers.traffic),
            ("delay", self.multipliers.delay),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ScenarioError::Multiplier(name, v));
            }
        }
        let mut names = std::collections::HashSet::new();
        for s in &self.services {
            if !names.insert(&s.name) {
                return Err(ScenarioError::DuplicateService(s.name.clone()));
            }
        }
        match &self.workload {
            WorkloadSpec::Poisson {
                rate,
                mean_duration,
                ..
            } => {
                if !(*rate >= 0.0 && rate.is_finite() && *mean_duration >= 1.0) {
                    return Err(ScenarioError::Poisson);
                }
            }
            WorkloadSpec::Explicit(f) => {
                if f.step_ms != self.units.step_ms {
                    return Err(ScenarioError::StepMismatch(f.step_ms, self.units.step_ms));
                }
            }
        }
        self.planner.validate()?;
        Ok(())
    }

    /// Validates the scenario, applies the multipliers and builds the network.
    pub fn prepare(&self) -> Result<PreparedScenario, ScenarioError> {
        self.check()?;
        let desc = PhysicalNetwork::scale_delays(&self.network, self.multipliers.delay);
        let network = build_network(&desc, &self.units, self.planner.k_paths)?;
        let services = self
            .services
            .iter()
            .map(|s| s.to_spec(&self.units, self.multipliers.traffic))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PreparedScenario {
            id: self.id.clone(),
            network,
            services,
            workload: self.workload.clone(),
            planner: self.planner,
            units: self.units,
            multipliers: self.multipliers,
        })
    }

    pub fn builtin(name: &str) -> Option<Scenario> {
        match name {
            "small" => Some(builtin_small()),
            "large" => Some(builtin_large()),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Built-in catalogue

#[derive(Debug, Clone, Copy)]
struct Tier {
    name: &'static str,
    mips: f64,
    cpu_cost: f64,
    idle_cost: f64,
}

const SMALL: Tier = Tier {
    name: "small",
    mips: 600.0,
    cpu_cost: 2e-5,
    idle_cost: 0.018,
};
const MEDIUM: Tier = Tier {
    name: "medium",
    mips: 1200.0,
    cpu_cost: 4e-5,
    idle_cost: 0.036,
};
const LARGE: Tier = Tier {
    name: "large",
    mips: 1800.0,
    cpu_cost: 6e-5,
    idle_cost: 0.054,
};

fn vm(id: String, dc: &str, tier: Tier) -> VmDescription {
    VmDescription {
        id,
        datacenter: dc.into(),
        tier: Some(tier.name.into()),
        capacity_mips: tier.mips,
        cpu_cost_per_mips_hour: tier.cpu_cost,
        idle_cost_per_hour: tier.idle_cost,
        setup_steps: 1,
    }
}

/// (name, target delay ms, ingress Mb/s, revenue per Gb)
const SERVICE_TABLE: [(&str, f64, f64, f64); 4] = [
    ("s1", 10.0, 3.0, 100.0),
    ("s2", 45.0, 10.0, 22.2),
    ("s3", 80.0, 15.0, 12.5),
    ("s4", 2500.0, 400.0, 0.4),
];

fn catalogue_service(index: usize, vnfs: Vec<VnfDescription>) -> ServiceDescription {
    let (name, delay, rate, revenue) = SERVICE_TABLE[index];
    ServiceDescription::chain(name, vnfs, rate, delay, revenue)
}

fn plain_vnfs(service: &str, count: usize) -> Vec<VnfDescription> {
    (0..count)
        .map(|i| VnfDescription {
            name: format!("{service}-f{}", i + 1),
            complexity: 1.0,
            max_instances: 1,
        })
        .collect()
}

/// Four single-VM datacenters forming a pair of small VMs and a pair of
/// medium VMs, each pair joined by a 2 ms link. Services s1 and s2 are
/// two-VNF chains.
pub fn builtin_small() -> Scenario {
    let dcs = [
        ("small-a", SMALL),
        ("small-b", SMALL),
        ("medium-a", MEDIUM),
        ("medium-b", MEDIUM),
    ];
    let link = |a: &str, b: &str, cost: f64| LinkDescription {
        id: Some(format!("{a}--{b}")),
        src: a.into(),
        dst: b.into(),
        bandwidth_mbps: None,
        delay_ms: 2.0,
        cost_per_gb: cost,
        bidirectional: true,
    };
    let network = TopologyDescription {
        switches: Vec::new(),
        datacenters: dcs
            .iter()
            .map(|(id, _)| DatacenterDescription {
                id: (*id).into(),
                gateway: None,
                capacity_mips: None,
            })
            .collect(),
        vms: dcs
            .iter()
            .map(|(id, tier)| vm(format!("vm-{id}"), id, *tier))
            .collect(),
        links: vec![
            link("small-a", "small-b", 0.02),
            link("medium-a", "medium-b", 0.04),
        ],
    };
    Scenario {
        version: SCHEMA_VERSION,
        id: "small".into(),
        units: UnitConstants::default(),
        network,
        services: (0..2)
            .map(|i| catalogue_service(i, plain_vnfs(SERVICE_TABLE[i].0, 2)))
            .collect(),
        workload: WorkloadSpec::Poisson {
            rate: 0.5,
            mean_duration: 3.0,
            lifespan: 10,
        },
        planner: PlannerConfig {
            horizon: 10,
            period: 1,
            k_paths: 3,
        },
        multipliers: Multipliers::default(),
        seed: 1,
    }
}

/// Parameters of the synthetic continental backbone used by the large
/// built-in scenario.
#[derive(Debug, Clone, Copy)]
pub struct BackboneParams {
    pub switches: usize,
    pub links: usize,
    pub datacenters: usize,
    /// VMs of each tier per datacenter.
    pub vms_per_tier: usize,
    pub width_km: f64,
    pub height_km: f64,
    pub delay_ms_per_km: f64,
    pub bandwidth_mbps: f64,
    pub cost_per_gb: f64,
    pub seed: u64,
}

impl Default for BackboneParams {
    fn default() -> Self {
        BackboneParams {
            switches: 197,
            links: 245,
            datacenters: 32,
            vms_per_tier: 14,
            width_km: 5000.0,
            height_km: 2500.0,
            delay_ms_per_km: 0.005,
            bandwidth_mbps: 10_000.0,
            cost_per_gb: 0.0025,
            seed: 0x00c0_9e47,
        }
    }
}

/// Random geometric backbone: a minimum spanning tree over uniformly placed
/// switches plus the shortest remaining pairs, with datacenters attached to
/// a random subset of switches.
pub fn backbone(p: &BackboneParams) -> TopologyDescription {
    assert!(p.switches >= 2 && p.links + 1 >= p.switches && p.datacenters <= p.switches);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let pos: Vec<(f64, f64)> = (0..p.switches)
        .map(|_| {
            (
                rng.random::<f64>() * p.width_km,
                rng.random::<f64>() * p.height_km,
            )
        })
        .collect();
    let km =
        |a: usize, b: usize| ((pos[a].0 - pos[b].0).powi(2) + (pos[a].1 - pos[b].1).powi(2)).sqrt();
    // Integer metres keep the edge ordering total.
    let mut pairs: Vec<(usize, usize, u64)> = (0..p.switches)
        .flat_map(|a| (a + 1..p.switches).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, (km(a, b) * 1000.0) as u64))
        .collect();
    pairs.sort_by_key(|&(a, b, d)| (d, a, b));
    let mut chosen: Vec<(usize, usize)> = kruskal_indices(p.switches, &pairs)
        .map(|(a, b, _)| (a.min(b), a.max(b)))
        .collect();
    let tree: std::collections::HashSet<(usize, usize)> = chosen.iter().copied().collect();
    chosen.extend(
        pairs
            .iter()
            .map(|&(a, b, _)| (a, b))
            .filter(|e| !tree.contains(e))
            .take(p.links - chosen.len()),
    );
    let switch = |i: usize| format!("sw{i:03}");
    let links = chosen
        .iter()
        .map(|&(a, b)| LinkDescription {
            id: Some(format!("{}--{}", switch(a), switch(b))),
            src: switch(a),
            dst: switch(b),
            bandwidth_mbps: Some(p.bandwidth_mbps),
            delay_ms: km(a, b) * p.delay_ms_per_km,
            cost_per_gb: p.cost_per_gb,
            bidirectional: true,
        })
        .collect();
    let mut gateways = sample(&mut rng, p.switches, p.datacenters).into_vec();
    gateways.sort_unstable();
    let mut datacenters = Vec::new();
    let mut vms = Vec::new();
    for (i, &g) in gateways.iter().enumerate() {
        let id = format!("dc{i:02}");
        for tier in [SMALL, MEDIUM, LARGE] {
            for j in 0..p.vms_per_tier {
                vms.push(vm(format!("{id}-{}{j:02}", tier.name), &id, tier));
            }
        }
        datacenters.push(DatacenterDescription {
            id,
            gateway: Some(switch(g)),
            capacity_mips: None,
        });
    }
    TopologyDescription {
        switches: (0..p.switches).map(switch).collect(),
        datacenters,
        vms,
        links,
    }
}

/// Continental backbone with 32 datacenters of 42 VMs each and four
/// five-VNF services; the second and third VNFs of s4 are three times as
/// complex and may run up to three instances.
pub fn builtin_large() -> Scenario {
    let services = (0..4)
        .map(|i| {
            let name = SERVICE_TABLE[i].0;
            let mut vnfs = plain_vnfs(name, 5);
            if name == "s4" {
                for v in &mut vnfs[1..3] {
                    v.complexity = 3.0;
                    v.max_instances = 3;
                }
            }
            catalogue_service(i, vnfs)
        })
        .collect();
    Scenario {
        version: SCHEMA_VERSION,
        id: "large".into(),
        units: UnitConstants::default(),
        network: backbone(&BackboneParams::default()),
        services,
        workload: WorkloadSpec::Poisson {
            rate: 1.0 / 3.0,
            mean_duration: 120.0,
            lifespan: 1440,
        },
        planner: PlannerConfig {
            horizon: 40,
            period: 20,
            k_paths: 3,
        },
        multipliers: Multipliers::default(),
        seed: 1,
    }
}
