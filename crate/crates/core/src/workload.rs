//! Time-stamped service requests: Poisson generation, window queries and
//! revenue over a planning horizon.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::service::ServiceSpec;
use crate::units::UnitConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RequestId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub id: RequestId,
    /// Index into the scenario's service list.
    pub service: usize,
    pub arrival: usize,
    /// First step at which the request is no longer served.
    pub departure: usize,
}

impl ServiceRequest {
    pub fn duration(&self) -> usize {
        self.departure - self.arrival
    }

    pub fn is_active(&self, t: usize) -> bool {
        self.arrival <= t && t < self.departure
    }

    /// Steps of `[t, t+h)` during which the request is alive.
    pub fn overlap(&self, t: usize, h: usize) -> usize {
        (t + h)
            .min(self.departure)
            .saturating_sub(t.max(self.arrival))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub requests: Vec<ServiceRequest>,
    pub lifespan: usize,
    pub step_ms: f64,
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("request {0} has an unknown service `{1}`")]
    UnknownService(usize, String),
    #[error("request {id}: invalid lifetime [{arrival}, {departure}) in lifespan {lifespan}")]
    BadLifetime {
        id: usize,
        arrival: usize,
        departure: usize,
        lifespan: usize,
    },
    #[error("duplicate request id {0}")]
    DuplicateId(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Seeded Poisson workload: exponential inter-arrival times (in steps),
/// exponential durations rounded up to at least one step, and a balanced
/// shuffled assignment of service types.
pub fn generate_poisson(
    service_count: usize,
    rate: f64,
    mean_duration: f64,
    lifespan: usize,
    step_ms: f64,
    seed: u64,
) -> Workload {
    assert!(service_count > 0, "at least one service is required");
    assert!(
        mean_duration >= 1.0,
        "mean duration must be at least one step"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::new();
    if rate > 0.0 && rate.is_finite() {
        let gap = Exp::new(rate).expect("positive rate");
        let mut t = 0.0f64;
        loop {
            t += gap.sample(&mut rng);
            // The first step is reserved for VM setup.
            let step = (t.ceil() as usize).max(1);
            if t >= lifespan as f64 || step >= lifespan {
                break;
            }
            times.push(step);
        }
    }
    let life = Exp::new(1.0 / mean_duration).expect("positive mean");
    let mut types: Vec<usize> = (0..times.len()).map(|i| i % service_count).collect();
    let durations: Vec<usize> = times
        .iter()
        .map(|_| (life.sample(&mut rng).ceil() as usize).max(1))
        .collect();
    types.shuffle(&mut rng);
    let requests = times
        .iter()
        .zip(durations)
        .zip(types)
        .enumerate()
        .map(|(i, ((&arrival, d), service))| ServiceRequest {
            id: RequestId(i),
            service,
            arrival,
            departure: (arrival + d).min(lifespan),
        })
        .collect();
    Workload {
        requests,
        lifespan,
        step_ms,
    }
}

impl Workload {
    /// Requests whose lifetime intersects `[t, t+h)`.
    pub fn active_in_window(&self, t: usize, h: usize) -> Vec<&ServiceRequest> {
        self.requests
            .iter()
            .filter(|r| r.overlap(t, h) > 0)
            .collect()
    }

    pub fn request(&self, id: RequestId) -> &ServiceRequest {
        &self.requests[id.0]
    }

    pub fn check(&self) -> Result<(), WorkloadError> {
        for (i, r) in self.requests.iter().enumerate() {
            if r.id.0 != i {
                return Err(WorkloadError::DuplicateId(r.id.0));
            }
            if r.arrival >= r.departure || r.departure > self.lifespan {
                return Err(WorkloadError::BadLifetime {
                    id: r.id.0,
                    arrival: r.arrival,
                    departure: r.departure,
                    lifespan: self.lifespan,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self, services: &[ServiceSpec]) -> String {
        let file = WorkloadFile {
            lifespan: self.lifespan,
            step_ms: self.step_ms,
            requests: self
                .requests
                .iter()
                .map(|r| RequestRecord {
                    id: r.id.0,
                    service: services[r.service].name.clone(),
                    arrival: r.arrival,
                    departure: r.departure,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("workload serialises")
    }

    pub fn from_json(text: &str, services: &[ServiceSpec]) -> Result<Self, WorkloadError> {
        let file: WorkloadFile = serde_json::from_str(text)?;
        file.into_workload(services)
    }
}

/// File form of a workload, with services referenced by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadFile {
    pub lifespan: usize,
    pub step_ms: f64,
    pub requests: Vec<RequestRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestRecord {
    pub id: usize,
    pub service: String,
    pub arrival: usize,
    pub departure: usize,
}

impl WorkloadFile {
    /// Requests are renumbered in file order; ids must be unique.
    pub fn into_workload(self, services: &[ServiceSpec]) -> Result<Workload, WorkloadError> {
        let mut seen = std::collections::HashSet::new();
        let mut requests = Vec::with_capacity(self.requests.len());
        for (i, r) in self.requests.into_iter().enumerate() {
            if !seen.insert(r.id) {
                return Err(WorkloadError::DuplicateId(r.id));
            }
            let service = services
                .iter()
                .position(|s| s.name == r.service)
                .ok_or(WorkloadError::UnknownService(r.id, r.service))?;
            requests.push(ServiceRequest {
                id: RequestId(i),
                service,
                arrival: r.arrival,
                departure: r.departure,
            });
        }
        let w = Workload {
            requests,
            lifespan: self.lifespan,
            step_ms: self.step_ms,
        };
        w.check()?;
        Ok(w)
    }
}

/// Revenue of serving `req` over the part of `[t, t+h)` it is alive.
pub fn horizon_revenue(
    req: &ServiceRequest,
    service: &ServiceSpec,
    t: usize,
    h: usize,
    units: &UnitConstants,
) -> f64 {
    service.revenue_per_gb
        * req.overlap(t, h) as f64
        * service.ingress_rate
        * units.gb_per_traffic_step()
}
