//! The immutable inputs of one planning run.

use thiserror::Error;

use crate::service::{traffic_profile, ServiceError, ServiceSpec, TrafficProfile};
use crate::topology::PhysicalNetwork;
use crate::units::UnitConstants;
use crate::workload::{Workload, WorkloadError};

#[derive(Debug, Clone)]
pub struct Problem {
    pub network: PhysicalNetwork,
    pub services: Vec<ServiceSpec>,
    pub profiles: Vec<TrafficProfile>,
    pub workload: Workload,
    pub units: UnitConstants,
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("request {0} references service index {1} out of range")]
    ServiceIndex(usize, usize),
}

impl Problem {
    pub fn new(
        network: PhysicalNetwork,
        services: Vec<ServiceSpec>,
        workload: Workload,
        units: UnitConstants,
    ) -> Result<Self, ProblemError> {
        let profiles = services
            .iter()
            .map(traffic_profile)
            .collect::<Result<Vec<_>, _>>()?;
        workload.check()?;
        if let Some(r) = workload
            .requests
            .iter()
            .find(|r| r.service >= services.len())
        {
            return Err(ProblemError::ServiceIndex(r.id.0, r.service));
        }
        Ok(Problem {
            network,
            services,
            profiles,
            workload,
            units,
        })
    }

    pub fn steps(&self) -> usize {
        self.workload.lifespan
    }

    /// Revenue earned per served step of a request of service `s`.
    pub fn revenue_per_step(&self, s: usize) -> f64 {
        let svc = &self.services[s];
        svc.revenue_per_gb * svc.ingress_rate * self.units.gb_per_traffic_step()
    }
}
